#include "expect/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "expect/errors.hpp"

namespace expect {

double f_beta(double p, double r, double beta) {
  if (p + r == 0.0) return 0.0;
  const double b2 = beta * beta;
  const double denom = b2 * p + r;
  if (denom == 0.0) return 0.0;
  return (1.0 + b2) * p * r / denom;
}

Prf prf_from_counts(const PrfCounts& c) {
  Prf out;
  out.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  out.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  out.f1 = f_beta(out.precision, out.recall, 1.0);
  out.f05 = f_beta(out.precision, out.recall, 0.5);
  return out;
}

namespace {

void check_aligned(const std::vector<Prediction>& preds,
                   const std::vector<AnnotatedInstance>& golds) {
  if (preds.size() != golds.size())
    throw AlignmentError("got " + std::to_string(preds.size()) + " predictions for " +
                         std::to_string(golds.size()) + " instances");
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i].id != golds[i].id)
      throw AlignmentError("prediction " + std::to_string(i) + " has id '" + preds[i].id +
                           "' but gold has '" + golds[i].id + "'");
}

PrfCounts instance_counts(const Prediction& pred, const AnnotatedInstance& gold) {
  PrfCounts c;
  for (int j : pred.evidence) {
    if (std::binary_search(gold.evidence.begin(), gold.evidence.end(), j))
      ++c.tp;
    else
      ++c.fp;
  }
  c.fn = static_cast<long long>(gold.evidence.size()) - c.tp;
  return c;
}

bool exact(const Prediction& pred, const AnnotatedInstance& gold) {
  return pred.error_type == gold.error_type && pred.evidence == gold.evidence;
}

}  // namespace

Prf token_prf(const std::vector<Prediction>& preds, const std::vector<AnnotatedInstance>& golds,
              PrfCounts* counts) {
  check_aligned(preds, golds);
  PrfCounts total;
  for (size_t i = 0; i < preds.size(); ++i) {
    const PrfCounts c = instance_counts(preds[i], golds[i]);
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
  }
  if (counts) *counts = total;
  return prf_from_counts(total);
}

double exact_match(const std::vector<Prediction>& preds,
                   const std::vector<AnnotatedInstance>& golds) {
  check_aligned(preds, golds);
  if (golds.empty()) throw EmptyInputError("instances");
  long long hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) hits += exact(preds[i], golds[i]);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(golds.size());
}

double label_accuracy(const std::vector<Prediction>& preds,
                      const std::vector<AnnotatedInstance>& golds) {
  check_aligned(preds, golds);
  if (golds.empty()) throw EmptyInputError("instances");
  long long hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) hits += preds[i].error_type == golds[i].error_type;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(golds.size());
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("sequences differ in length");
  const size_t n = a.size();
  if (n < 2) throw UndefinedCorrelationError("need at least two points");
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) throw UndefinedCorrelationError("constant sequence");
  return cov / std::sqrt(va * vb);
}

EvalReport evaluate_predictions(const std::vector<Prediction>& preds,
                                const std::vector<AnnotatedInstance>& golds) {
  check_aligned(preds, golds);
  if (golds.empty()) throw EmptyInputError("instances");
  EvalReport r;
  r.n_instances = static_cast<long long>(golds.size());

  long long em_hits = 0, acc_hits = 0;
  std::map<std::string, TypeBreakdown> per_type;
  for (size_t i = 0; i < preds.size(); ++i) {
    const PrfCounts c = instance_counts(preds[i], golds[i]);
    r.counts.tp += c.tp;
    r.counts.fp += c.fp;
    r.counts.fn += c.fn;
    em_hits += exact(preds[i], golds[i]);
    acc_hits += preds[i].error_type == golds[i].error_type;

    TypeBreakdown& tb = per_type[to_string(golds[i].error_type)];
    ++tb.support;
    tb.counts.tp += c.tp;
    tb.counts.fp += c.fp;
    tb.counts.fn += c.fn;
    tb.correct_type += preds[i].error_type == golds[i].error_type;
  }

  r.token = prf_from_counts(r.counts);
  r.exact_match = 100.0 * static_cast<double>(em_hits) / static_cast<double>(r.n_instances);
  r.label_accuracy = 100.0 * static_cast<double>(acc_hits) / static_cast<double>(r.n_instances);
  for (auto& [name, tb] : per_type) tb.token = prf_from_counts(tb.counts);
  r.per_type = std::move(per_type);
  return r;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["precision"] = report.token.precision;
  j["recall"] = report.token.recall;
  j["f1"] = report.token.f1;
  j["f05"] = report.token.f05;
  j["exact_match"] = report.exact_match;
  j["label_accuracy"] = report.label_accuracy;
  j["n_instances"] = report.n_instances;
  j["counts"] = {{"tp", report.counts.tp}, {"fp", report.counts.fp}, {"fn", report.counts.fn}};
  nlohmann::ordered_json types = nlohmann::ordered_json::object();
  for (const auto& [name, tb] : report.per_type) {
    types[name] = {{"precision", tb.token.precision}, {"recall", tb.token.recall},
                   {"f05", tb.token.f05},             {"support", tb.support},
                   {"correct_type", tb.correct_type}, {"tp", tb.counts.tp},
                   {"fp", tb.counts.fp},              {"fn", tb.counts.fn}};
  }
  j["per_type"] = std::move(types);
  return j;
}

}  // namespace expect
