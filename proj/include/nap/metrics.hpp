#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "nap/matrix.hpp"
#include "nap/objective.hpp"

namespace nap {

/// Pairwise-domain-distance summary: mean Euclidean distance between the
/// per-domain embedding centers, over all unordered domain pairs.
struct PddReport {
  double value = 0.0;
  std::vector<int> domain_ids;                            // distinct ids, ascending
  Matrix centers;                                         // one row per domain_ids entry
  std::vector<std::tuple<int, int, double>> pair_distances;  // (p, q, dist), p < q
};

/// Throws FewerThanTwoDomains when fewer than two distinct domains appear.
PddReport pdd(const Matrix& h, const std::vector<int>& domains);

/// Table "p,q,distance" plus a closing "pdd,<value>" summary line.
void write_pdd_report(const PddReport& report, std::ostream& out);

/// Mean cosine similarity over cross-domain ordered pairs: all of them, the
/// promoted (transformed) subset, and the remainder. A mean over an empty
/// set is reported absent.
struct CdpSimilarityReport {
  std::string space;
  std::optional<double> all_mean;
  std::optional<double> transformed_mean;
  std::optional<double> remaining_mean;
  long long all_count = 0;
  long long transformed_count = 0;
  long long remaining_count = 0;
};

CdpSimilarityReport cdp_similarity_report(const Matrix& vectors, const std::vector<int>& domains,
                                          const SimilarityMask& mask, std::string space_name);

struct ProbeConfig {
  int steps = 500;
  double lr = 0.1;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
};

/// Throws ConfigInvalid on nonpositive steps/lr or negative weight decay.
void validate(const ProbeConfig& cfg);

/// Multinomial logistic regression over frozen embeddings; weights include a
/// bias row (input is augmented with a constant-1 column).
struct ProbeModel {
  Matrix w;  // (D+1) x K
  int num_classes = 0;
};

/// Full-batch gradient descent with L2 penalty on the non-bias rows.
/// Throws DegenerateLabels when the train split has fewer than two classes.
ProbeModel fit_probe(const Matrix& train_emb, const std::vector<int>& train_labels,
                     int num_classes, const ProbeConfig& cfg);

/// Top-1 accuracy; argmax ties resolve to the lowest class index.
double score_probe(const ProbeModel& model, const Matrix& emb, const std::vector<int>& labels);

/// fit_probe + score_probe with the class count inferred from both splits.
double linear_probe(const Matrix& train_emb, const std::vector<int>& train_labels,
                    const Matrix& test_emb, const std::vector<int>& test_labels,
                    const ProbeConfig& cfg);

/// Delimited text: header node_id,domain,label,e0..e{D-1}; values at full
/// round-trip precision. Throws IoError.
void export_embeddings(const Matrix& h, const std::vector<int>& domains,
                       const std::vector<int>& labels, const std::string& path);

struct EmbeddingTable {
  Matrix h;
  std::vector<int> domains;
  std::vector<int> labels;
};

/// Inverse of export_embeddings; bit-exact round trip. Throws IoError or
/// ParseError.
EmbeddingTable load_embeddings(const std::string& path);

}  // namespace nap
