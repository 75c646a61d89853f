#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tick/types.hpp"

namespace tick {

// ---------------------------------------------------------------------------
// Preference agreement
// ---------------------------------------------------------------------------

/// Bins a mean 1-5 slider value (1 = first response much better):
/// Win for [1, 2.5), Tie for [2.5, 3.5], Loss for (3.5, 5].
PreferenceLabel bin_preference(double mean_score);

/// Pairwise label distance: 0 for a match, 2 for an inverted preference
/// (Win vs Loss), 1 when exactly one side is a Tie.
int pld(PreferenceLabel label, PreferenceLabel prediction);

using LabelPair = std::pair<PreferenceLabel, PreferenceLabel>;  ///< (human label, prediction)

/// Mean PLD over all pairs, in [0, 2].
double wpld(std::span<const LabelPair> pairs);

struct AgreementSummary {
  std::size_t n = 0;
  double pld0 = 0.0;  ///< fraction of pairs at distance 0
  double pld1 = 0.0;
  double pld2 = 0.0;
  double wpld = 0.0;
};
AgreementSummary agreement_summary(std::span<const LabelPair> pairs);

// ---------------------------------------------------------------------------
// Inter-annotator agreement
// ---------------------------------------------------------------------------

enum class MeasurementLevel { kNominal, kOrdinal, kInterval };
std::string_view to_string(MeasurementLevel level);
MeasurementLevel parse_measurement_level(std::string_view text);

/// rows = items, columns = annotators; nullopt marks a missing rating.
using RatingMatrix = std::vector<std::vector<std::optional<double>>>;

/// Krippendorff's alpha from the coincidence matrix. Items with fewer than two
/// ratings are not pairable and are ignored; fewer than two pairable items
/// raises kInsufficientData. When every pairable rating is the same value the
/// expected disagreement vanishes and alpha is defined as 1.
double krippendorff_alpha(const RatingMatrix& ratings, MeasurementLevel level = MeasurementLevel::kInterval);

// ---------------------------------------------------------------------------
// Text similarity
// ---------------------------------------------------------------------------

/// Lowercased maximal runs of ASCII alphanumerics (bytes >= 0x80 count as
/// word characters, so UTF-8 words stay whole).
std::vector<std::string> tokenize(std::string_view text);

/// Checklists are compared as one text, questions joined by newlines.
std::string flatten_checklist(const std::vector<std::string>& questions);

/// Sentence BLEU: 4-gram maximum, uniform weights, brevity penalty, add-one
/// smoothing on the 2..4-gram precisions. Empty hypothesis gives 0.
double bleu(std::string_view hypothesis, std::string_view reference);

enum class RougeVariant { kRouge1, kRouge2, kRougeL };
double rouge_f1(std::string_view hypothesis, std::string_view reference, RougeVariant variant);

struct SimilarityReport {
  double bleu = 0.0;
  double rouge1_f1 = 0.0;
  double rouge2_f1 = 0.0;
  double rougeL_f1 = 0.0;
  double count_mae = 0.0;
};

/// Per-text-pair metrics (count_mae left at 0; it is a dataset-level number).
SimilarityReport text_similarity(std::string_view hypothesis, std::string_view reference);

/// Mean absolute difference of aligned question counts.
double count_mae(std::span<const int> lengths_a, std::span<const int> lengths_b);

// ---------------------------------------------------------------------------
// Scalar statistics
// ---------------------------------------------------------------------------

/// Sample Pearson r. Throws kConstantSeries when either side has no variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Strict majority of an odd-length vote list (kEvenLength otherwise).
BinaryAnswer majority_vote(std::span<const BinaryAnswer> answers);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-item set precision/recall/F1, macro-averaged. Conventions: both sets
/// empty scores (1, 1, 1); an empty prediction has precision 0; a nonempty
/// prediction against an empty gold set scores (0, 0, 0).
Prf classification_prf(const std::vector<std::set<std::string>>& predicted,
                       const std::vector<std::set<std::string>>& gold);

struct QuestionRef {
  std::string instruction_id;
  std::size_t question_index = 0;
  friend auto operator<=>(const QuestionRef&, const QuestionRef&) = default;
};

using CategoryLabels = std::map<QuestionRef, std::set<std::string>>;

/// For each category: YES answers over all answers to questions carrying that
/// label, pooled across every evaluation of the question.
std::map<std::string, Rational> categorical_pass_rate(std::span<const ChecklistEvaluation> evaluations,
                                                      const CategoryLabels& labels);

}  // namespace tick
