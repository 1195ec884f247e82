#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "nap/matrix.hpp"
#include "nap/tensor.hpp"

namespace nap {

/// Contrastive-objective settings shared by both training stages.
struct LossConfig {
  double tau = 0.5;              // temperature, > 0
  double nap_ratio = 0.01;       // rho in [0, 1]: fraction of cross-domain entries promoted
  int warmup_epochs = 50;        // n >= 0
  double cdp_removal_ratio = 0;  // q in [0, 1], ablation only
};

/// Throws ConfigInvalid on tau <= 0, ratios outside [0, 1], or n < 0.
void validate(const LossConfig& cfg);

/// Promoted cross-domain pairs. Ordered (i, j): i indexes the first-view
/// anchor, j the second-view partner. Never contains a same-domain pair.
struct SimilarityMask {
  std::vector<std::pair<int, int>> selected;
  int epoch = -1;
  long long r = 0;
};

/// Count promoted from the ratio: ceil(rho * cross_count), with a guard so
/// a product that is an integer up to decimal-representation error does not
/// round up past it. rho = 0 gives 0; any rho > 0 gives at least 1.
long long promote_count(double rho, long long cross_count);

/// Entry (i,j) = cosine(h_alpha row i, h_beta row j); all-zero rows have
/// similarity 0 by convention. Plain matrices (used on detached values).
Matrix cosine_similarity_matrix(const Matrix& h_alpha, const Matrix& h_beta);

/// Entries with equal domains (diagonal included) set to exactly 0.
Matrix zero_same_domain(const Matrix& b, const std::vector<int>& domains);

/// Global top-r over cross-domain positions of a domain-zeroed similarity
/// matrix. Ties break by ascending (i, j). Selection draws only from
/// cross-domain positions, so legitimately-zero similarities are eligible
/// and zeroed same-domain entries never are. |selected| = min(r, C).
SimilarityMask select_top_r(const Matrix& b, const std::vector<int>& domains, long long r);

/// Dense 0/1 matrix of the selected pairs.
Matrix mask_matrix(const SimilarityMask& mask, int n);

/// Per-anchor keep matrices for the removal ablation, in fixed order
/// {first-view/inter, first-view/intra, second-view/inter, second-view/intra}.
/// Each cross-domain off-diagonal entry is independently 0 with probability
/// q, everything else 1. Exposed so tests can reproduce the realized set.
std::array<Matrix, 4> removal_keep_masks(const std::vector<int>& domains, double q,
                                         std::uint64_t seed);

/// Symmetrized contrastive loss over both views. Per anchor i of the first
/// view: numerator = exp(s(i,i)/tau) + sum over selected (i,j) of the
/// inter-view and intra-view promoted terms; denominator = positive plus all
/// j != i inter-view and intra-view terms. Second-view anchors use the
/// transposed mask. Mean over all 2N anchors. An empty mask reduces this to
/// the plain warm-up objective bit-for-bit.
Tensor contrastive_loss(Tape& tape, Tensor h_alpha, Tensor h_beta, const SimilarityMask& mask,
                        const LossConfig& cfg, const std::vector<int>& domains);

/// Warm-up objective with each cross-domain negative term independently
/// deleted with probability q (seeded). q = 0 reproduces the warm-up loss
/// exactly.
Tensor cdp_removal_loss(Tape& tape, Tensor h_alpha, Tensor h_beta, double q, std::uint64_t seed,
                        const LossConfig& cfg, const std::vector<int>& domains);

}  // namespace nap
