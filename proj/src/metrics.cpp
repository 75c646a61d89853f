#include "tick/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace tick {

PreferenceLabel bin_preference(double mean_score) {
  if (!(mean_score >= 1.0 && mean_score <= 5.0)) {
    throw Error(ErrorCode::kOutOfRange, "mean preference must be in [1, 5], got " + std::to_string(mean_score));
  }
  if (mean_score < 2.5) return PreferenceLabel::kWin;
  if (mean_score <= 3.5) return PreferenceLabel::kTie;
  return PreferenceLabel::kLoss;
}

int pld(PreferenceLabel label, PreferenceLabel prediction) {
  if (label == prediction) return 0;
  if (label == PreferenceLabel::kTie || prediction == PreferenceLabel::kTie) return 1;
  return 2;
}

double wpld(std::span<const LabelPair> pairs) { return agreement_summary(pairs).wpld; }

AgreementSummary agreement_summary(std::span<const LabelPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no preference pairs");
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& [label, prediction] : pairs) ++counts[pld(label, prediction)];
  const double n = static_cast<double>(pairs.size());
  AgreementSummary s;
  s.n = pairs.size();
  s.pld0 = static_cast<double>(counts[0]) / n;
  s.pld1 = static_cast<double>(counts[1]) / n;
  s.pld2 = static_cast<double>(counts[2]) / n;
  s.wpld = static_cast<double>(counts[1] + 2 * counts[2]) / n;
  return s;
}

std::string_view to_string(MeasurementLevel level) {
  switch (level) {
    case MeasurementLevel::kNominal: return "nominal";
    case MeasurementLevel::kOrdinal: return "ordinal";
    case MeasurementLevel::kInterval: return "interval";
  }
  return "interval";
}

MeasurementLevel parse_measurement_level(std::string_view text) {
  if (text == "nominal") return MeasurementLevel::kNominal;
  if (text == "ordinal") return MeasurementLevel::kOrdinal;
  if (text == "interval") return MeasurementLevel::kInterval;
  throw Error(ErrorCode::kInvalidArgument, "unknown measurement level '" + std::string(text) + "'");
}

double krippendorff_alpha(const RatingMatrix& ratings, MeasurementLevel level) {
  // Distinct values, sorted; coincidences are indexed by value rank.
  std::vector<double> values;
  std::vector<std::vector<double>> units;
  for (const auto& row : ratings) {
    std::vector<double> present;
    for (const auto& r : row) {
      if (r) present.push_back(*r);
    }
    if (present.size() >= 2) {
      values.insert(values.end(), present.begin(), present.end());
      units.push_back(std::move(present));
    }
  }
  if (units.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "need at least two items rated by two or more annotators, found " + std::to_string(units.size()));
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const std::size_t v = values.size();
  if (v == 1) return 1.0;
  const auto rank = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), x) - values.begin());
  };

  std::vector<double> o(v * v, 0.0);
  for (const auto& unit : units) {
    const double weight = 1.0 / static_cast<double>(unit.size() - 1);
    std::vector<std::size_t> counts(v, 0);
    for (double x : unit) ++counts[rank(x)];
    for (std::size_t c = 0; c < v; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t k = 0; k < v; ++k) {
        if (counts[k] == 0) continue;
        const double pairs = c == k ? static_cast<double>(counts[c] * (counts[c] - 1))
                                    : static_cast<double>(counts[c] * counts[k]);
        o[c * v + k] += pairs * weight;
      }
    }
  }

  std::vector<double> marginal(v, 0.0);
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) marginal[c] += o[c * v + k];
  }
  const double n = std::accumulate(marginal.begin(), marginal.end(), 0.0);

  const auto delta2 = [&](std::size_t c, std::size_t k) -> double {
    if (c == k) return 0.0;
    switch (level) {
      case MeasurementLevel::kNominal:
        return 1.0;
      case MeasurementLevel::kOrdinal: {
        const auto [lo, hi] = std::minmax(c, k);
        double span = 0.0;
        for (std::size_t g = lo; g <= hi; ++g) span += marginal[g];
        span -= (marginal[lo] + marginal[hi]) / 2.0;
        return span * span;
      }
      case MeasurementLevel::kInterval: {
        const double d = values[c] - values[k];
        return d * d;
      }
    }
    return 0.0;
  };

  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) {
      const double d = delta2(c, k);
      observed += o[c * v + k] * d;
      expected += marginal[c] * marginal[k] * d;
    }
  }
  observed /= n;
  expected /= n * (n - 1.0);
  if (expected == 0.0) return 1.0;
  return 1.0 - observed / expected;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string flatten_checklist(const std::vector<std::string>& questions) {
  std::string out;
  for (const auto& q : questions) {
    if (!out.empty()) out.push_back('\n');
    out += q;
  }
  return out;
}

namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

// Clipped matches and hypothesis n-gram total.
std::pair<std::size_t, std::size_t> overlap(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                                            std::size_t n) {
  const auto h = ngrams(hyp, n);
  const auto r = ngrams(ref, n);
  std::size_t matches = 0;
  std::size_t total = 0;
  for (const auto& [gram, count] : h) {
    total += count;
    if (auto it = r.find(gram); it != r.end()) matches += std::min(count, it->second);
  }
  return {matches, total};
}

double f1(double matches, double hyp_total, double ref_total) {
  if (matches == 0.0 || hyp_total == 0.0 || ref_total == 0.0) return 0.0;
  const double p = matches / hyp_total;
  const double r = matches / ref_total;
  return 2.0 * p * r / (p + r);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double bleu(std::string_view hypothesis, std::string_view reference) {
  constexpr std::size_t kMaxOrder = 4;
  const auto hyp = tokenize(hypothesis);
  const auto ref = tokenize(reference);
  if (hyp.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    auto [matches, total] = overlap(hyp, ref, n);
    double precision = 0.0;
    if (n == 1) {
      if (matches == 0) return 0.0;
      precision = static_cast<double>(matches) / static_cast<double>(total);
    } else {
      precision = (static_cast<double>(matches) + 1.0) / (static_cast<double>(total) + 1.0);
    }
    log_sum += std::log(precision) / static_cast<double>(kMaxOrder);
  }
  const double c = static_cast<double>(hyp.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::min(1.0, brevity * std::exp(log_sum));
}

double rouge_f1(std::string_view hypothesis, std::string_view reference, RougeVariant variant) {
  const auto hyp = tokenize(hypothesis);
  const auto ref = tokenize(reference);
  switch (variant) {
    case RougeVariant::kRouge1:
    case RougeVariant::kRouge2: {
      const std::size_t n = variant == RougeVariant::kRouge1 ? 1 : 2;
      const auto [matches, hyp_total] = overlap(hyp, ref, n);
      const double ref_total = ref.size() >= n ? static_cast<double>(ref.size() - n + 1) : 0.0;
      return f1(static_cast<double>(matches), static_cast<double>(hyp_total), ref_total);
    }
    case RougeVariant::kRougeL:
      return f1(static_cast<double>(lcs_length(hyp, ref)), static_cast<double>(hyp.size()),
                static_cast<double>(ref.size()));
  }
  return 0.0;
}

SimilarityReport text_similarity(std::string_view hypothesis, std::string_view reference) {
  SimilarityReport s;
  s.bleu = bleu(hypothesis, reference);
  s.rouge1_f1 = rouge_f1(hypothesis, reference, RougeVariant::kRouge1);
  s.rouge2_f1 = rouge_f1(hypothesis, reference, RougeVariant::kRouge2);
  s.rougeL_f1 = rouge_f1(hypothesis, reference, RougeVariant::kRougeL);
  return s;
}

double count_mae(std::span<const int> lengths_a, std::span<const int> lengths_b) {
  if (lengths_a.size() != lengths_b.size()) throw Error(ErrorCode::kLengthMismatch, "count lists differ in length");
  if (lengths_a.empty()) throw Error(ErrorCode::kEmptyInput, "count_mae of empty lists");
  double sum = 0.0;
  for (std::size_t i = 0; i < lengths_a.size(); ++i) sum += std::abs(lengths_a[i] - lengths_b[i]);
  return sum / static_cast<double>(lengths_a.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kLengthMismatch, "pearson inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::kInsufficientData, "pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kConstantSeries, "pearson of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

BinaryAnswer majority_vote(std::span<const BinaryAnswer> answers) {
  if (answers.empty() || answers.size() % 2 == 0) {
    throw Error(ErrorCode::kEvenLength, "majority vote needs an odd number of answers, got " +
                                            std::to_string(answers.size()));
  }
  const auto yes = std::count(answers.begin(), answers.end(), BinaryAnswer::kYes);
  return 2 * static_cast<std::size_t>(yes) > answers.size() ? BinaryAnswer::kYes : BinaryAnswer::kNo;
}

Prf classification_prf(const std::vector<std::set<std::string>>& predicted,
                       const std::vector<std::set<std::string>>& gold) {
  if (predicted.size() != gold.size()) throw Error(ErrorCode::kLengthMismatch, "label lists differ in length");
  if (predicted.empty()) throw Error(ErrorCode::kEmptyInput, "no items to score");
  Prf sum;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& p = predicted[i];
    const auto& g = gold[i];
    if (p.empty() && g.empty()) {
      sum.precision += 1.0;
      sum.recall += 1.0;
      sum.f1 += 1.0;
      continue;
    }
    std::size_t hits = 0;
    for (const auto& label : p) hits += g.count(label);
    const double precision = p.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(p.size());
    const double recall = g.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(g.size());
    sum.precision += precision;
    sum.recall += recall;
    sum.f1 += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  const double n = static_cast<double>(gold.size());
  return {sum.precision / n, sum.recall / n, sum.f1 / n};
}

std::map<std::string, Rational> categorical_pass_rate(std::span<const ChecklistEvaluation> evaluations,
                                                      const CategoryLabels& labels) {
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> tallies;  // passes, total
  std::set<QuestionRef> seen;
  for (const auto& e : evaluations) {
    for (const auto& record : e.records()) {
      QuestionRef ref{e.instruction_id(), record.question_index()};
      auto it = labels.find(ref);
      if (it == labels.end()) continue;
      seen.insert(ref);
      for (const auto& category : it->second) {
        auto& [passes, total] = tallies[category];
        passes += numeric(record.answer());
        ++total;
      }
    }
  }
  for (const auto& [ref, _] : labels) {
    if (!seen.count(ref)) {
      throw Error(ErrorCode::kUnknownQuestionRef,
                  ref.instruction_id + "#" + std::to_string(ref.question_index) + " has no evaluation");
    }
  }
  std::map<std::string, Rational> out;
  for (const auto& [category, t] : tallies) out.emplace(category, Rational(t.first, t.second));
  return out;
}

}  // namespace tick
