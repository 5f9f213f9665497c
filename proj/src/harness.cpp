#include "expect/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include "expect/align.hpp"
#include "expect/errors.hpp"

namespace expect {

namespace fs = std::filesystem;

namespace {

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' needs an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' needs a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("key '" + key + "' needs a boolean, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Accepts a token array, or a raw string to whitespace-split.
std::vector<std::string> tokens_from_field(const nlohmann::ordered_json& field,
                                           const std::string& name) {
  std::vector<std::string> out;
  if (field.is_array()) {
    for (const auto& t : field) out.push_back(t.get<std::string>());
  } else if (field.is_string()) {
    std::istringstream ss(field.get<std::string>());
    std::string tok;
    while (ss >> tok) out.push_back(tok);
  } else {
    throw ValidationError(name, "expected a token array or a string");
  }
  return out;
}

}  // namespace

void RunConfig::resolve() {
  if (lr < 0.0) {
    if (model.encoder.backend == "toy")
      lr = 1e-3;
    else
      lr = model.head == HeadKind::Labeling ? 1e-5 : 5e-5;
  }
  if (batch_size < 0) batch_size = model.head == HeadKind::Labeling ? 32 : 16;
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (patience < 1) throw ConfigError("train.patience must be >= 1");
  model.encoder.validate();
}

std::vector<std::pair<std::string, std::string>> RunConfig::canonical() const {
  RunConfig r = *this;
  r.resolve();
  return {{"data.train", r.train_path},
          {"data.dev", r.dev_path},
          {"data.parses_train", r.parses_train_path},
          {"data.parses_dev", r.parses_dev_path},
          {"out.dir", r.out_dir},
          {"model.head", to_string(r.model.head)},
          {"model.use_syntax", r.model.use_syntax ? "1" : "0"},
          {"model.none_weight", format_double(r.model.none_weight)},
          {"model.syn_mlp_hidden", std::to_string(r.model.syn_mlp_hidden)},
          {"encoder.backend", r.model.encoder.backend},
          {"encoder.hidden", std::to_string(r.model.encoder.hidden)},
          {"encoder.layers", std::to_string(r.model.encoder.layers)},
          {"encoder.heads", std::to_string(r.model.encoder.heads)},
          {"encoder.ffn", std::to_string(r.model.encoder.ffn)},
          {"encoder.vocab", std::to_string(r.model.encoder.vocab.size)},
          {"encoder.max_positions", std::to_string(r.model.encoder.vocab.max_positions)},
          {"train.lr", format_double(r.lr)},
          {"train.batch_size", std::to_string(r.batch_size)},
          {"train.epochs", std::to_string(r.epochs)},
          {"train.seed", std::to_string(r.seed)},
          {"train.patience", std::to_string(r.patience)}};
}

std::string RunConfig::fingerprint() const {
  std::string blob;
  for (const auto& [k, v] : canonical()) {
    blob += k;
    blob += '=';
    blob += v;
    blob += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(blob)));
  return buf;
}

RunConfig run_config_from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
  RunConfig c;
  for (const auto& [key, value] : pairs) {
    if (key == "data.train")
      c.train_path = value;
    else if (key == "data.dev")
      c.dev_path = value;
    else if (key == "data.parses_train")
      c.parses_train_path = value;
    else if (key == "data.parses_dev")
      c.parses_dev_path = value;
    else if (key == "out.dir")
      c.out_dir = value;
    else if (key == "model.head")
      c.model.head = head_kind_from_string(value);
    else if (key == "model.use_syntax")
      c.model.use_syntax = parse_bool(key, value);
    else if (key == "model.none_weight")
      c.model.none_weight = parse_double(key, value);
    else if (key == "model.syn_mlp_hidden")
      c.model.syn_mlp_hidden = parse_int(key, value);
    else if (key == "encoder.backend")
      c.model.encoder.backend = value;
    else if (key == "encoder.hidden")
      c.model.encoder.hidden = parse_int(key, value);
    else if (key == "encoder.layers")
      c.model.encoder.layers = parse_int(key, value);
    else if (key == "encoder.heads")
      c.model.encoder.heads = parse_int(key, value);
    else if (key == "encoder.ffn")
      c.model.encoder.ffn = parse_int(key, value);
    else if (key == "encoder.vocab")
      c.model.encoder.vocab.size = parse_int(key, value);
    else if (key == "encoder.max_positions")
      c.model.encoder.vocab.max_positions = parse_int(key, value);
    else if (key == "train.lr")
      c.lr = parse_double(key, value);
    else if (key == "train.batch_size")
      c.batch_size = parse_int(key, value);
    else if (key == "train.epochs")
      c.epochs = parse_int(key, value);
    else if (key == "train.seed")
      try {
        size_t pos = 0;
        c.seed = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError("key 'train.seed' needs an integer, got '" + value + "'");
      }
    else if (key == "train.patience")
      c.patience = parse_int(key, value);
    else
      throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    pairs.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return run_config_from_pairs(pairs);
}

nlohmann::ordered_json run_report_to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["fingerprint"] = report.fingerprint;
  j["best_epoch"] = report.best_epoch;
  j["best_ckpt"] = report.best_ckpt;
  j["best_dev_f05"] = report.best_dev_f05;
  j["wall_seconds"] = report.wall_seconds;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : report.epochs) {
    nlohmann::ordered_json ej;
    ej["epoch"] = e.epoch;
    if (e.train_loss)
      ej["train_loss"] = *e.train_loss;
    else
      ej["train_loss"] = nullptr;
    ej["dev"] = report_to_json(e.dev);
    ej["ckpt"] = e.ckpt_path;
    j["epochs"].push_back(std::move(ej));
  }
  return j;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

constexpr char kMagic[4] = {'X', 'P', 'C', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  const ParameterStore& store = model.store();
  if (!store.finalized()) throw ContractError("cannot checkpoint an uninitialized model");

  nlohmann::ordered_json header;
  header["format"] = "expect-ckpt";
  header["model"] = model_config_to_json(model.config());
  header["slots"] = nlohmann::ordered_json::array();
  for (const auto& s : store.slots())
    header["slots"].push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}});
  header["total"] = store.size();
  const std::string hbytes = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_u32(out, kCkptVersion);
  write_u64(out, hbytes.size());
  out.write(hbytes.data(), static_cast<std::streamsize>(hbytes.size()));
  out.write(reinterpret_cast<const char*>(store.values().data()),
            static_cast<std::streamsize>(store.size() * sizeof(double)));
  if (!out) throw Error("short write to checkpoint: " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not a checkpoint file: " + path);
  const std::uint32_t version = read_u32(in);
  if (version != kCkptVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t hlen = read_u64(in);
  std::string hbytes(hlen, '\0');
  if (!in.read(hbytes.data(), static_cast<std::streamsize>(hlen)))
    throw FormatError("truncated checkpoint header");
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(hbytes);
  } catch (const nlohmann::json::parse_error& ex) {
    throw FormatError(std::string("bad checkpoint header: ") + ex.what());
  }

  auto model = std::make_unique<Model>(model_config_from_json(header.at("model")));
  model->init_params(0);
  ParameterStore& store = model->store();

  const auto& slots = header.at("slots");
  if (slots.size() != store.slots().size()) throw FormatError("checkpoint slot table mismatch");
  for (size_t i = 0; i < store.slots().size(); ++i) {
    const auto& s = store.slots()[i];
    const auto& hj = slots[i];
    if (hj.at("name").get<std::string>() != s.name || hj.at("rows").get<int>() != s.rows ||
        hj.at("cols").get<int>() != s.cols)
      throw FormatError("checkpoint slot table mismatch at '" + s.name + "'");
  }
  if (header.at("total").get<long>() != store.size())
    throw FormatError("checkpoint weight count mismatch");

  if (!in.read(reinterpret_cast<char*>(store.values().data()),
               static_cast<std::streamsize>(store.size() * sizeof(double))))
    throw FormatError("truncated checkpoint weights");
  return model;
}

bool deterministic_mode() {
  const char* v = std::getenv("EXPECT_DETERMINISTIC");
  return v == nullptr || std::string(v) != "0";
}

std::vector<ModelInput> make_inputs(const Model& model,
                                    const std::vector<AnnotatedInstance>& instances,
                                    const std::map<std::string, DependencyParse>* parses) {
  std::vector<ModelInput> inputs;
  inputs.reserve(instances.size());
  for (const auto& inst : instances) {
    const DependencyParse* parse = nullptr;
    if (parses) {
      auto it = parses->find(inst.id);
      if (it == parses->end()) throw Error("missing parse for instance '" + inst.id + "'");
      parse = &it->second;
    }
    inputs.push_back(model.make_input(inst, parse));
  }
  return inputs;
}

std::vector<Prediction> predict_corpus(const Model& model,
                                       const std::vector<AnnotatedInstance>& instances,
                                       const std::map<std::string, DependencyParse>* parses) {
  const std::vector<ModelInput> inputs = make_inputs(model, instances, parses);
  std::vector<Prediction> preds(instances.size());

  const size_t count = instances.size();
  unsigned workers = std::thread::hardware_concurrency();
  if (deterministic_mode() || count < 64 || workers < 2) {
    for (size_t i = 0; i < count; ++i) preds[i] = model.predict(instances[i], inputs[i]);
    return preds;
  }

  workers = std::min<unsigned>(workers, 8);
  const size_t chunk = (count + workers - 1) / workers;
  std::vector<std::future<void>> futures;
  for (unsigned w = 0; w < workers; ++w) {
    const size_t begin = w * chunk;
    const size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    futures.push_back(std::async(std::launch::async, [&, begin, end] {
      for (size_t i = begin; i < end; ++i) preds[i] = model.predict(instances[i], inputs[i]);
    }));
  }
  for (auto& f : futures) f.get();
  return preds;
}

std::vector<AnnotatedInstance> load_corpus_or_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus: " + path);
  std::string first;
  bool has_edit = true;
  while (std::getline(in, first)) {
    const std::string t = trim(first);
    if (t.empty()) continue;
    try {
      has_edit = nlohmann::ordered_json::parse(t).contains("edit");
    } catch (const nlohmann::json::parse_error&) {
      has_edit = true;  // let the strict loader produce the error
    }
    break;
  }
  if (has_edit) {
    auto out = load_corpus(path);
    if (out.empty()) throw EmptyInputError("corpus");
    return out;
  }

  // Raw {id, source, target} pairs: derive the edit by alignment.
  in.clear();
  in.seekg(0);
  std::vector<AnnotatedInstance> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(t);
    } catch (const nlohmann::json::parse_error& ex) {
      throw ParseError("line " + std::to_string(lineno) + ": " + ex.what());
    }
    AnnotatedInstance inst;
    inst.id = j.value("id", "pair-" + std::to_string(lineno));
    inst.x_tokens = tokens_from_field(j.at("source"), "source");
    inst.y_tokens = tokens_from_field(j.at("target"), "target");
    inst.edit = extract_span_edit(inst.x_tokens, inst.y_tokens);
    inst.error_type = ErrorType::Others;
    validate_instance(inst);
    out.push_back(std::move(inst));
  }
  if (out.empty()) throw EmptyInputError("corpus");
  return out;
}

void save_predictions(const std::string& path, const std::vector<Prediction>& preds) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write predictions: " + path);
  for (const auto& p : preds) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["evidence"] = p.evidence;
    j["type"] = to_string(p.error_type);
    j["scores"] = p.scores;
    out << j.dump() << '\n';
  }
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predictions: " + path);
  std::vector<Prediction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    try {
      const auto j = nlohmann::ordered_json::parse(t);
      Prediction p;
      p.id = j.at("id").get<std::string>();
      p.evidence = j.at("evidence").get<std::vector<int>>();
      const std::string type_name = j.at("type").get<std::string>();
      const auto type = error_type_from_string(type_name);
      if (!type)
        throw ValidationError("type", "line " + std::to_string(lineno) + ": unknown error type '" +
                                          type_name + "'");
      p.error_type = *type;
      if (j.contains("scores"))
        for (const auto& [k, v] : j.at("scores").items()) p.scores[k] = v.get<double>();
      std::sort(p.evidence.begin(), p.evidence.end());
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError("line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

RunReport train(const RunConfig& raw_config) {
  RunConfig config = raw_config;
  config.resolve();
  if (config.train_path.empty()) throw ConfigError("data.train is required");
  if (config.out_dir.empty()) throw ConfigError("out.dir is required");
  fs::create_directories(config.out_dir);

  const std::vector<AnnotatedInstance> train_set = load_corpus(config.train_path);
  const std::vector<AnnotatedInstance> dev_set =
      config.dev_path.empty() ? train_set : load_corpus(config.dev_path);

  std::map<std::string, DependencyParse> train_parses, dev_parses;
  const std::map<std::string, DependencyParse>* tp = nullptr;
  const std::map<std::string, DependencyParse>* dp = nullptr;
  if (config.model.use_syntax) {
    if (config.parses_train_path.empty())
      throw ConfigError("model.use_syntax requires data.parses_train");
    train_parses = load_parse_fixtures(config.parses_train_path);
    tp = &train_parses;
    if (config.dev_path.empty()) {
      dp = tp;
    } else {
      if (config.parses_dev_path.empty())
        throw ConfigError("model.use_syntax requires data.parses_dev");
      dev_parses = load_parse_fixtures(config.parses_dev_path);
      dp = &dev_parses;
    }
  }

  const auto t0 = std::chrono::steady_clock::now();

  Model model(config.model);
  model.init_params(config.seed);
  const std::vector<ModelInput> train_inputs = make_inputs(model, train_set, tp);

  AdamOptimizer opt;
  opt.lr = config.lr;
  opt.reset(model.store().size());

  RunReport report;
  report.fingerprint = config.fingerprint();

  const auto eval_epoch = [&](int epoch, std::optional<double> train_loss) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss;
    const auto preds = predict_corpus(model, dev_set, dp);
    rec.dev = evaluate_predictions(preds, dev_set);
    char name[32];
    std::snprintf(name, sizeof(name), "epoch-%03d.ckpt", epoch);
    rec.ckpt_path = (fs::path(config.out_dir) / name).string();
    save_checkpoint(rec.ckpt_path, model);
    report.epochs.push_back(std::move(rec));
  };

  eval_epoch(0, std::nullopt);
  int best = 0;
  int stale = 0;

  std::mt19937_64 shuffler(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      model.store().zero_grads();
      const double scale = 1.0 / static_cast<double>(end - start);
      for (size_t k = start; k < end; ++k) {
        const size_t i = order[k];
        loss_sum += model.loss_and_grad(train_set[i], train_inputs[i], scale);
      }
      opt.step(model.store().values(), model.store().grads());
    }
    eval_epoch(epoch, loss_sum / static_cast<double>(train_set.size()));

    const EvalReport& cur = report.epochs[epoch].dev;
    const EvalReport& top = report.epochs[best].dev;
    if (cur.token.f05 > top.token.f05 ||
        (cur.token.f05 == top.token.f05 && cur.exact_match > top.exact_match)) {
      best = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }

  report.best_epoch = best;
  report.best_dev_f05 = report.epochs[best].dev.token.f05;
  const std::string best_path = (fs::path(config.out_dir) / "best.ckpt").string();
  fs::copy_file(report.epochs[best].ckpt_path, best_path, fs::copy_options::overwrite_existing);
  report.best_ckpt = best_path;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream rout(fs::path(config.out_dir) / "report.json");
  rout << run_report_to_json(report).dump(2) << '\n';
  return report;
}

namespace {

struct Bucket {
  int lo, hi;
  const char* name;
};

constexpr Bucket kBuckets[] = {{0, 10, "<10"},    {10, 20, "10-20"}, {20, 30, "20-30"},
                               {30, 40, "30-40"}, {40, 60, "40-60"}, {60, -1, ">60"}};

}  // namespace

EvalRunReport bucketed_report(const std::vector<Prediction>& preds,
                              const std::vector<AnnotatedInstance>& golds) {
  EvalRunReport r;
  r.overall = evaluate_predictions(preds, golds);
  for (const Bucket& b : kBuckets) {
    std::vector<Prediction> bp;
    std::vector<AnnotatedInstance> bg;
    for (size_t i = 0; i < golds.size(); ++i) {
      const int len = static_cast<int>(golds[i].x_tokens.size());
      if (len >= b.lo && (b.hi < 0 || len < b.hi)) {
        bp.push_back(preds[i]);
        bg.push_back(golds[i]);
      }
    }
    BucketReport br;
    br.name = b.name;
    br.n = static_cast<long long>(bg.size());
    if (!bg.empty()) br.report = evaluate_predictions(bp, bg);
    r.buckets.push_back(std::move(br));
  }
  return r;
}

nlohmann::ordered_json eval_run_report_to_json(const EvalRunReport& report) {
  nlohmann::ordered_json j;
  j["overall"] = report_to_json(report.overall);
  j["buckets"] = nlohmann::ordered_json::array();
  for (const auto& b : report.buckets) {
    nlohmann::ordered_json bj;
    bj["name"] = b.name;
    bj["n"] = b.n;
    bj["report"] = b.n > 0 ? report_to_json(b.report) : nlohmann::ordered_json(nullptr);
    j["buckets"].push_back(std::move(bj));
  }
  return j;
}

EvalRunReport evaluate_run(const std::string& ckpt_path, const std::string& data_path,
                           const std::string& parses_path) {
  const std::unique_ptr<Model> model = load_checkpoint(ckpt_path);
  const std::vector<AnnotatedInstance> golds = load_corpus_or_pairs(data_path);
  std::map<std::string, DependencyParse> parses;
  const std::map<std::string, DependencyParse>* pp = nullptr;
  if (model->config().use_syntax) {
    if (parses_path.empty())
      throw ConfigError("this checkpoint uses syntax features; a parse file is required");
    parses = load_parse_fixtures(parses_path);
    pp = &parses;
  }
  const auto preds = predict_corpus(*model, golds, pp);
  return bucketed_report(preds, golds);
}

nlohmann::ordered_json ablation_report_to_json(const AblationReport& report) {
  nlohmann::ordered_json j;
  j["with_syntax"] = run_report_to_json(report.with_syntax);
  j["without_syntax"] = run_report_to_json(report.without_syntax);
  j["overall_f05_delta"] = report.overall_f05_delta;
  j["f05_delta"] = report.f05_delta;
  return j;
}

AblationReport compare_syntax_ablation(const RunConfig& a, const RunConfig& b) {
  if (a.model.use_syntax == b.model.use_syntax)
    throw ConfigError("the two runs must differ in model.use_syntax");
  const RunConfig& syn = a.model.use_syntax ? a : b;
  const RunConfig& plain = a.model.use_syntax ? b : a;

  const auto strip = [](const RunConfig& c) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : c.canonical()) {
      if (k == "model.use_syntax" || k == "out.dir" || k == "data.parses_train" ||
          k == "data.parses_dev")
        continue;
      out[k] = v;
    }
    return out;
  };
  if (strip(syn) != strip(plain))
    throw ConfigError("ablation configs differ beyond the syntax flag");

  AblationReport r;
  r.with_syntax = train(syn);
  r.without_syntax = train(plain);

  const EvalReport& es = r.with_syntax.epochs[r.with_syntax.best_epoch].dev;
  const EvalReport& ep = r.without_syntax.epochs[r.without_syntax.best_epoch].dev;
  r.overall_f05_delta = es.token.f05 - ep.token.f05;
  for (const auto& [type, tb] : es.per_type) {
    const auto it = ep.per_type.find(type);
    if (it != ep.per_type.end()) r.f05_delta[type] = tb.token.f05 - it->second.token.f05;
  }
  return r;
}

AblationReport compare_syntax_ablation(const RunConfig& config) {
  RunConfig syn = config, plain = config;
  syn.model.use_syntax = true;
  plain.model.use_syntax = false;
  syn.out_dir = (fs::path(config.out_dir) / "syn").string();
  plain.out_dir = (fs::path(config.out_dir) / "nosyn").string();
  return compare_syntax_ablation(syn, plain);
}

}  // namespace expect
