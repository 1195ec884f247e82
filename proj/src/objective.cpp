#include "nap/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "nap/errors.hpp"
#include "nap/graph.hpp"
#include "nap/rng.hpp"

namespace nap {

void validate(const LossConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw ConfigInvalid("tau must be positive");
  if (!(cfg.nap_ratio >= 0.0 && cfg.nap_ratio <= 1.0))
    throw ConfigInvalid("nap_ratio must be in [0, 1]");
  if (cfg.warmup_epochs < 0) throw ConfigInvalid("warmup_epochs must be nonnegative");
  if (!(cfg.cdp_removal_ratio >= 0.0 && cfg.cdp_removal_ratio <= 1.0))
    throw ConfigInvalid("cdp_removal_ratio must be in [0, 1]");
}

long long promote_count(double rho, long long cross_count) {
  if (rho <= 0.0 || cross_count <= 0) return 0;
  // Shrink slightly so a product that equals an integer up to floating
  // representation error (e.g. 0.01 * 43200) does not ceil past it.
  const double x = rho * static_cast<double>(cross_count) * (1.0 - 1e-12) - 1e-9;
  long long r = static_cast<long long>(std::ceil(x));
  if (r < 1) r = 1;
  if (r > cross_count) r = cross_count;
  return r;
}

namespace {

Matrix row_normalized(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (int c = 0; c < m.cols; ++c) s += m.at(i, c) * m.at(i, c);
    const double n = std::sqrt(s);
    if (n > 0.0)
      for (int c = 0; c < m.cols; ++c) out.at(i, c) = m.at(i, c) / n;
  }
  return out;
}

void check_domains(const std::vector<int>& domains, int n, const char* where) {
  if (static_cast<int>(domains.size()) != n)
    throw ShapeMismatch(std::string(where) + ": " + std::to_string(domains.size()) +
                        " domains for " + std::to_string(n) + " rows");
}

}  // namespace

Matrix cosine_similarity_matrix(const Matrix& h_alpha, const Matrix& h_beta) {
  if (!h_alpha.same_shape(h_beta))
    throw ShapeMismatch("cosine_similarity_matrix: views differ in shape");
  return matmul(row_normalized(h_alpha), transposed(row_normalized(h_beta)));
}

Matrix zero_same_domain(const Matrix& b, const std::vector<int>& domains) {
  if (b.rows != b.cols) throw ShapeMismatch("zero_same_domain: matrix not square");
  check_domains(domains, b.rows, "zero_same_domain");
  Matrix out = b;
  for (int i = 0; i < b.rows; ++i)
    for (int j = 0; j < b.cols; ++j)
      if (domains[i] == domains[j]) out.at(i, j) = 0.0;
  return out;
}

SimilarityMask select_top_r(const Matrix& b, const std::vector<int>& domains, long long r) {
  if (b.rows != b.cols) throw ShapeMismatch("select_top_r: matrix not square");
  check_domains(domains, b.rows, "select_top_r");
  if (r < 0) r = 0;

  struct Entry {
    double value;
    int i, j;
  };
  std::vector<Entry> cross;
  for (int i = 0; i < b.rows; ++i)
    for (int j = 0; j < b.cols; ++j)
      if (domains[i] != domains[j]) cross.push_back({b.at(i, j), i, j});

  const long long take = std::min<long long>(r, static_cast<long long>(cross.size()));
  std::sort(cross.begin(), cross.end(), [](const Entry& a, const Entry& c) {
    if (a.value != c.value) return a.value > c.value;
    return std::tie(a.i, a.j) < std::tie(c.i, c.j);
  });

  SimilarityMask mask;
  mask.r = r;
  mask.selected.reserve(static_cast<std::size_t>(take));
  for (long long k = 0; k < take; ++k) mask.selected.emplace_back(cross[k].i, cross[k].j);
  return mask;
}

Matrix mask_matrix(const SimilarityMask& mask, int n) {
  Matrix m(n, n);
  for (auto [i, j] : mask.selected) {
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw InvariantViolation("mask pair (" + std::to_string(i) + ", " + std::to_string(j) +
                               ") out of range for n=" + std::to_string(n));
    m.at(i, j) = 1.0;
  }
  return m;
}

std::array<Matrix, 4> removal_keep_masks(const std::vector<int>& domains, double q,
                                         std::uint64_t seed) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigInvalid("removal ratio must be in [0, 1]");
  const int n = static_cast<int>(domains.size());
  std::array<Matrix, 4> keep = {Matrix::ones(n, n), Matrix::ones(n, n), Matrix::ones(n, n),
                                Matrix::ones(n, n)};
  Rng rng(seed);
  for (Matrix& k : keep)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && domains[i] != domains[j] && rng.bernoulli(q)) k.at(i, j) = 0.0;
  return keep;
}

namespace {

/// Single loss builder shared by every mode so that the warm-up objective,
/// the masked objective with an empty mask, and the removal objective with
/// all-ones keeps execute the identical op sequence (bit-identical values).
Tensor nce_loss(Tape& tape, Tensor ha, Tensor hb, double tau, const Matrix& maskm,
                const std::array<Matrix, 4>& keep) {
  const int n = ha.rows();
  if (!ha.value().same_shape(hb.value())) throw ShapeMismatch("loss: views differ in shape");

  Tensor na = row_l2_normalize(ha);
  Tensor nb = row_l2_normalize(hb);
  Tensor eab = exp(scale(matmul(na, transpose(nb)), 1.0 / tau));
  Tensor eaa = exp(scale(matmul(na, transpose(na)), 1.0 / tau));
  Tensor ebb = exp(scale(matmul(nb, transpose(nb)), 1.0 / tau));
  Tensor eba = transpose(eab);

  Matrix eye = Matrix::identity(n);
  Matrix off = Matrix::ones(n, n);
  for (int i = 0; i < n; ++i) off.at(i, i) = 0.0;
  Tensor I = tape.constant(std::move(eye));
  Tensor OD = tape.constant(std::move(off));
  Tensor M = tape.constant(maskm);
  Tensor MT = tape.constant(transposed(maskm));
  Tensor kab = tape.constant(keep[0]);
  Tensor kaa = tape.constant(keep[1]);
  Tensor kba = tape.constant(keep[2]);
  Tensor kbb = tape.constant(keep[3]);
  Tensor col1 = tape.constant(Matrix::ones(n, 1));

  auto rowsum = [&](Tensor x) { return matmul(x, col1); };
  auto anchor_loss = [&](Tensor e_inter, Tensor e_intra, Tensor m, Tensor k_inter,
                         Tensor k_intra) {
    Tensor pos = rowsum(hadamard(e_inter, I));
    Tensor den = add(add(pos, rowsum(hadamard(hadamard(e_inter, OD), k_inter))),
                     rowsum(hadamard(hadamard(e_intra, OD), k_intra)));
    Tensor num = add(add(pos, rowsum(hadamard(e_inter, m))), rowsum(hadamard(e_intra, m)));
    return negate(log(divide(num, den)));
  };

  Tensor loss_a = anchor_loss(eab, eaa, M, kab, kaa);
  Tensor loss_b = anchor_loss(eba, ebb, MT, kba, kbb);
  return scale(add(sum(loss_a), sum(loss_b)), 1.0 / (2.0 * n));
}

std::array<Matrix, 4> all_ones_keep(int n) {
  return {Matrix::ones(n, n), Matrix::ones(n, n), Matrix::ones(n, n), Matrix::ones(n, n)};
}

void check_mask_purity(const SimilarityMask& mask, const std::vector<int>& domains) {
  for (auto [i, j] : mask.selected) {
    if (i < 0 || j < 0 || i >= static_cast<int>(domains.size()) ||
        j >= static_cast<int>(domains.size()))
      throw InvariantViolation("mask pair (" + std::to_string(i) + ", " + std::to_string(j) +
                               ") out of range");
    if (domains[i] == domains[j])
      throw InvariantViolation("mask pair (" + std::to_string(i) + ", " + std::to_string(j) +
                               ") is same-domain");
  }
}

}  // namespace

Tensor contrastive_loss(Tape& tape, Tensor h_alpha, Tensor h_beta, const SimilarityMask& mask,
                        const LossConfig& cfg, const std::vector<int>& domains) {
  validate(cfg);
  check_domains(domains, h_alpha.rows(), "contrastive_loss");
  check_mask_purity(mask, domains);
  return nce_loss(tape, h_alpha, h_beta, cfg.tau, mask_matrix(mask, h_alpha.rows()),
                  all_ones_keep(h_alpha.rows()));
}

Tensor cdp_removal_loss(Tape& tape, Tensor h_alpha, Tensor h_beta, double q, std::uint64_t seed,
                        const LossConfig& cfg, const std::vector<int>& domains) {
  validate(cfg);
  check_domains(domains, h_alpha.rows(), "cdp_removal_loss");
  return nce_loss(tape, h_alpha, h_beta, cfg.tau, Matrix(h_alpha.rows(), h_alpha.rows()),
                  removal_keep_masks(domains, q, seed));
}

}  // namespace nap
