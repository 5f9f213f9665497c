#include "expect/synthesize.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "expect/align.hpp"
#include "expect/corpus.hpp"
#include "expect/errors.hpp"

namespace expect {
namespace {

struct Draft {
  std::vector<std::string> x, y;
  std::vector<int> heads;           // over y
  std::vector<std::string> rels;
  std::vector<int> evidence;        // indices into x
  ErrorType type = ErrorType::Others;
};

int pick(std::mt19937_64& rng, int n) {
  return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
}

template <typename T>
const T& choice(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[pick(rng, static_cast<int>(items.size()))];
}

// The plural verb drops its -s in X: "The two dogs bark ..." -> "barks".
// Evidence is the subject noun plus its quantifier when present; both sit
// within two tree hops of the verb.
Draft make_sva(std::mt19937_64& rng) {
  static const std::vector<std::pair<std::string, std::string>> kVerbs = {
      {"bark", "barks"}, {"run", "runs"},     {"sing", "sings"},
      {"play", "plays"}, {"sleep", "sleeps"}, {"jump", "jumps"}};
  static const std::vector<std::string> kNouns = {"dogs",     "cats",    "birds",
                                                  "students", "workers", "children"};
  static const std::vector<std::string> kNums = {"two", "three", "four", "five", "many",
                                                 "several"};
  static const std::vector<std::string> kAdvs = {"loudly", "quickly", "happily",
                                                 "quietly", "often",  "together"};
  Draft d;
  d.type = ErrorType::SubjectVerbAgreement;
  const auto& verb = choice(rng, kVerbs);
  const std::string noun = choice(rng, kNouns);
  const std::string adv = choice(rng, kAdvs);
  if (pick(rng, 2) == 0) {
    const std::string num = choice(rng, kNums);
    d.y = {"The", num, noun, verb.first, adv, "."};
    d.heads = {2, 2, 3, -1, 3, 3};
    d.rels = {"det", "nummod", "nsubj", "root", "advmod", "punct"};
    d.x = {"The", num, noun, verb.second, adv, "."};
    d.evidence = {1, 2};
  } else {
    d.y = {"The", noun, verb.first, adv, "."};
    d.heads = {1, 2, -1, 2, 2};
    d.rels = {"det", "nsubj", "root", "advmod", "punct"};
    d.x = {"The", noun, verb.second, adv, "."};
    d.evidence = {1};
  }
  return d;
}

// The plural noun loses its -s in X; the quantifier demanding plural is the
// evidence, one hop from the noun.
Draft make_number(std::mt19937_64& rng) {
  static const std::vector<std::string> kSubjects = {"She", "He", "Tom", "Mary", "Anna", "Sam"};
  static const std::vector<std::string> kVerbs = {"bought",   "sold",    "found",
                                                  "carried",  "painted", "counted"};
  static const std::vector<std::pair<std::string, std::string>> kNouns = {
      {"book", "books"},     {"apple", "apples"}, {"car", "cars"},
      {"letter", "letters"}, {"box", "boxes"},    {"idea", "ideas"}};
  static const std::vector<std::string> kNums = {"two", "three", "four", "five", "several",
                                                 "many"};
  static const std::vector<std::string> kAdvs = {"yesterday", "today", "recently", "twice",
                                                 "already",   "there"};
  Draft d;
  d.type = ErrorType::Number;
  const auto& noun = choice(rng, kNouns);
  d.y = {choice(rng, kSubjects), choice(rng, kVerbs), choice(rng, kNums), noun.second,
         choice(rng, kAdvs), "."};
  d.heads = {1, -1, 3, 1, 1, 1};
  d.rels = {"nsubj", "root", "nummod", "obj", "advmod", "punct"};
  d.x = d.y;
  d.x[3] = noun.first;
  d.evidence = {2};
  return d;
}

// A wrong preposition follows an adjective that selects the right one; the
// adjective is the evidence, two hops from the preposition.
Draft make_preposition(std::mt19937_64& rng) {
  struct Frame {
    const char* adj;
    const char* prep;
    const char* obj;
  };
  static const std::vector<Frame> kFrames = {{"interested", "in", "music"},
                                             {"afraid", "of", "spiders"},
                                             {"good", "at", "chess"},
                                             {"famous", "for", "cheese"},
                                             {"different", "from", "mine"},
                                             {"proud", "of", "you"}};
  static const std::vector<std::string> kSubjects = {"He", "She", "Tom", "Mary"};
  static const std::vector<std::string> kPreps = {"on", "at", "of", "in", "for", "about",
                                                  "with", "from"};
  Draft d;
  d.type = ErrorType::Preposition;
  const Frame& f = choice(rng, kFrames);
  std::string wrong = choice(rng, kPreps);
  while (wrong == f.prep) wrong = choice(rng, kPreps);
  d.y = {choice(rng, kSubjects), "is", f.adj, f.prep, f.obj, "."};
  d.heads = {2, 2, -1, 4, 2, 2};
  d.rels = {"nsubj", "cop", "root", "case", "obl", "punct"};
  d.x = d.y;
  d.x[3] = wrong;
  d.evidence = {2};
  return d;
}

// The gerund complement appears as a bare verb in X; the governing verb is
// the evidence, one hop away.
Draft make_gerund(std::mt19937_64& rng) {
  struct Frame {
    const char* gerund;
    const char* base;
    const char* obj;
  };
  static const std::vector<Frame> kFrames = {{"studying", "study", "English"},
                                             {"reading", "read", "novels"},
                                             {"writing", "write", "reports"},
                                             {"cooking", "cook", "dinner"},
                                             {"singing", "sing", "songs"}};
  static const std::vector<std::string> kSubjects = {"I", "We", "They", "You"};
  static const std::vector<std::string> kVerbs = {"enjoy", "keep", "avoid", "finish",
                                                  "practice", "suggest"};
  Draft d;
  d.type = ErrorType::Gerund;
  const Frame& f = choice(rng, kFrames);
  d.y = {choice(rng, kSubjects), choice(rng, kVerbs), f.gerund, f.obj, "."};
  d.heads = {1, -1, 1, 2, 1};
  d.rels = {"nsubj", "root", "xcomp", "obj", "punct"};
  d.x = d.y;
  d.x[2] = f.base;
  d.evidence = {1};
  return d;
}

// X drops the article; the bare noun is the evidence, one hop from the
// inserted article in Y.
Draft make_article(std::mt19937_64& rng) {
  struct Frame {
    const char* verb;
    const char* noun;
  };
  static const std::vector<Frame> kFrames = {{"bought", "book"},  {"wrote", "letter"},
                                             {"built", "house"},  {"sang", "song"},
                                             {"drew", "map"},     {"cooked", "meal"}};
  static const std::vector<std::string> kSubjects = {"She", "He", "Tom", "Mary"};
  static const std::vector<std::string> kArticles = {"a", "the"};
  static const std::vector<std::string> kAdvs = {"today", "yesterday", "recently", "again"};
  Draft d;
  d.type = ErrorType::Article;
  const Frame& f = choice(rng, kFrames);
  d.y = {choice(rng, kSubjects), f.verb, choice(rng, kArticles), f.noun, choice(rng, kAdvs),
         "."};
  d.heads = {1, -1, 3, 1, 1, 1};
  d.rels = {"nsubj", "root", "det", "obj", "advmod", "punct"};
  d.x = {d.y[0], d.y[1], d.y[3], d.y[4], d.y[5]};
  d.evidence = {2};
  return d;
}

// X inserts a spurious preposition after a transitive verb; deleting it
// restores Y and the verb is the evidence.
Draft make_transitive(std::mt19937_64& rng) {
  struct Frame {
    const char* verb;
    const char* prep;
    const char* noun;
  };
  static const std::vector<Frame> kFrames = {{"discuss", "about", "plan"},
                                             {"enter", "into", "room"},
                                             {"answer", "to", "question"},
                                             {"attend", "at", "party"},
                                             {"approach", "to", "city"},
                                             {"visit", "to", "museum"}};
  static const std::vector<std::string> kSubjects = {"We", "They", "I", "You"};
  static const std::vector<std::string> kAdvs = {"now", "today", "soon", "later"};
  Draft d;
  d.type = ErrorType::TransitiveVerb;
  const Frame& f = choice(rng, kFrames);
  d.y = {choice(rng, kSubjects), f.verb, "the", f.noun, choice(rng, kAdvs), "."};
  d.heads = {1, -1, 3, 1, 1, 1};
  d.rels = {"nsubj", "root", "det", "obj", "advmod", "punct"};
  d.x = {d.y[0], d.y[1], f.prep, d.y[2], d.y[3], d.y[4], d.y[5]};
  d.evidence = {1};
  return d;
}

// A stylistic adverb swap nothing in the taxonomy explains: no evidence.
Draft make_others(std::mt19937_64& rng) {
  static const std::vector<std::pair<std::string, std::string>> kAdvs = {
      {"very", "really"}, {"quite", "rather"}, {"so", "too"}, {"almost", "nearly"}};
  static const std::vector<std::string> kNouns = {"meeting", "movie", "lecture",
                                                  "journey", "game",  "speech"};
  static const std::vector<std::string> kAdjs = {"long",  "boring", "exciting",
                                                 "short", "noisy",  "great"};
  Draft d;
  d.type = ErrorType::Others;
  const auto& adv = choice(rng, kAdvs);
  d.y = {"The", choice(rng, kNouns), "was", adv.second, choice(rng, kAdjs), "."};
  d.heads = {1, 4, 4, 4, -1, 4};
  d.rels = {"det", "nsubj", "cop", "advmod", "root", "punct"};
  d.x = d.y;
  d.x[3] = adv.first;
  d.evidence = {};
  return d;
}

Draft make_draft(ErrorType type, std::mt19937_64& rng) {
  switch (type) {
    case ErrorType::SubjectVerbAgreement:
      return make_sva(rng);
    case ErrorType::Number:
      return make_number(rng);
    case ErrorType::Preposition:
      return make_preposition(rng);
    case ErrorType::Gerund:
      return make_gerund(rng);
    case ErrorType::Article:
      return make_article(rng);
    case ErrorType::TransitiveVerb:
      return make_transitive(rng);
    case ErrorType::Others:
      return make_others(rng);
    default:
      throw ConfigError("no generator rule for type '" + to_string(type) + "'");
  }
}

}  // namespace

const std::vector<ErrorType>& supported_synth_types() {
  static const std::vector<ErrorType> kTypes = {
      ErrorType::SubjectVerbAgreement, ErrorType::Number,         ErrorType::Preposition,
      ErrorType::Gerund,               ErrorType::Article,        ErrorType::TransitiveVerb,
      ErrorType::Others};
  return kTypes;
}

SynthOutput synthesize(const SynthOptions& options) {
  if (options.n < 1) throw ConfigError("need n >= 1 instances");

  std::map<ErrorType, double> mix = options.mix;
  if (mix.empty()) {
    for (ErrorType t : {ErrorType::SubjectVerbAgreement, ErrorType::Number,
                        ErrorType::Preposition, ErrorType::Gerund, ErrorType::Others})
      mix[t] = 1.0;
  }
  const auto& supported = supported_synth_types();
  double total = 0.0;
  std::vector<std::pair<ErrorType, double>> weights;  // enum order
  for (const auto& [t, w] : mix) {
    if (std::find(supported.begin(), supported.end(), t) == supported.end())
      throw ConfigError("no generator rule for type '" + to_string(t) + "'");
    if (w < 0.0) throw ConfigError("negative weight for type '" + to_string(t) + "'");
    if (w > 0.0) weights.emplace_back(t, w);
    total += w;
  }
  if (total <= 0.0) throw ConfigError("mix weights sum to zero");

  SynthOutput out;
  out.instances.reserve(options.n);
  for (int i = 0; i < options.n; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);

    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    ErrorType type = weights.back().first;
    for (const auto& [t, w] : weights) {
      if (u < w) {
        type = t;
        break;
      }
      u -= w;
    }

    Draft d = make_draft(type, rng);
    AnnotatedInstance inst;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", i);
    inst.id = id;
    inst.x_tokens = std::move(d.x);
    inst.y_tokens = std::move(d.y);
    inst.edit = extract_span_edit(inst.x_tokens, inst.y_tokens);
    inst.error_type = d.type;
    inst.evidence = std::move(d.evidence);
    validate_instance(inst);

    DependencyParse parse;
    parse.heads = std::move(d.heads);
    parse.rels = std::move(d.rels);
    validate_parse(parse);
    out.parses[inst.id] = std::move(parse);
    out.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace expect
