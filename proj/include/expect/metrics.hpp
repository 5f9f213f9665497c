#pragma once

#include <map>
#include <string>
#include <vector>

#include "expect/instance.hpp"
#include "expect/models.hpp"

namespace expect {

struct PrfCounts {
  long long tp = 0, fp = 0, fn = 0;
};

struct Prf {
  double precision = 0.0, recall = 0.0, f1 = 0.0, f05 = 0.0;
};

/// F_beta; 0 when both inputs are 0.
double f_beta(double p, double r, double beta);

Prf prf_from_counts(const PrfCounts& c);

struct TypeBreakdown {
  Prf token;
  PrfCounts counts;
  long long support = 0;  // gold instances of the type
  long long correct_type = 0;
};

struct EvalReport {
  Prf token;
  PrfCounts counts;
  double exact_match = 0.0;     // percent
  double label_accuracy = 0.0;  // percent
  long long n_instances = 0;
  std::map<std::string, TypeBreakdown> per_type;
};

/// Micro-averaged token P/R/F over evidence index sets, label-agnostic.
/// Predictions and golds must be parallel lists with matching ids.
Prf token_prf(const std::vector<Prediction>& preds, const std::vector<AnnotatedInstance>& golds,
              PrfCounts* counts = nullptr);

/// Percent of instances with both the evidence set and the type correct.
double exact_match(const std::vector<Prediction>& preds,
                   const std::vector<AnnotatedInstance>& golds);

/// Percent of instances with the correct type, evidence ignored.
double label_accuracy(const std::vector<Prediction>& preds,
                      const std::vector<AnnotatedInstance>& golds);

/// Product-moment correlation; UndefinedCorrelationError on constant or
/// too-short input.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Full report including the per-gold-type breakdown.
EvalReport evaluate_predictions(const std::vector<Prediction>& preds,
                                const std::vector<AnnotatedInstance>& golds);

nlohmann::ordered_json report_to_json(const EvalReport& report);

}  // namespace expect
