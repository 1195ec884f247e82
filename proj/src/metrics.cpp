#include "nap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "nap/errors.hpp"
#include "nap/rng.hpp"
#include "nap/text.hpp"

namespace nap {

PddReport pdd(const Matrix& h, const std::vector<int>& domains) {
  if (static_cast<int>(domains.size()) != h.rows)
    throw ShapeMismatch("pdd: " + std::to_string(domains.size()) + " domains for " +
                        std::to_string(h.rows) + " rows");
  std::map<int, int> counts;
  for (int d : domains) counts[d] += 1;
  if (counts.size() < 2)
    throw FewerThanTwoDomains("pdd needs at least 2 domains, got " +
                              std::to_string(counts.size()));

  PddReport rep;
  std::map<int, int> rank;
  for (const auto& [d, c] : counts) {
    rank[d] = static_cast<int>(rep.domain_ids.size());
    rep.domain_ids.push_back(d);
  }
  const int P = static_cast<int>(rep.domain_ids.size());
  rep.centers = Matrix(P, h.cols);
  for (int i = 0; i < h.rows; ++i) {
    const int r = rank[domains[i]];
    for (int c = 0; c < h.cols; ++c) rep.centers.at(r, c) += h.at(i, c);
  }
  for (int r = 0; r < P; ++r) {
    const double n = counts[rep.domain_ids[r]];
    for (int c = 0; c < h.cols; ++c) rep.centers.at(r, c) /= n;
  }
  double total = 0.0;
  for (int p = 0; p < P; ++p)
    for (int q = p + 1; q < P; ++q) {
      double s = 0.0;
      for (int c = 0; c < h.cols; ++c) {
        const double d = rep.centers.at(p, c) - rep.centers.at(q, c);
        s += d * d;
      }
      const double dist = std::sqrt(s);
      rep.pair_distances.emplace_back(rep.domain_ids[p], rep.domain_ids[q], dist);
      total += dist;
    }
  rep.value = total / static_cast<double>(rep.pair_distances.size());
  return rep;
}

void write_pdd_report(const PddReport& report, std::ostream& out) {
  out << "p,q,distance\n";
  for (const auto& [p, q, d] : report.pair_distances)
    out << p << "," << q << "," << fmt_double(d) << "\n";
  out << "pdd," << fmt_double(report.value) << "\n";
}

namespace {

Matrix unit_rows(const Matrix& m) {
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

double row_dot(const Matrix& m, int i, int j) {
  double s = 0.0;
  for (int c = 0; c < m.cols; ++c) s += m.at(i, c) * m.at(j, c);
  return s;
}

}  // namespace

CdpSimilarityReport cdp_similarity_report(const Matrix& vectors, const std::vector<int>& domains,
                                          const SimilarityMask& mask, std::string space_name) {
  const int n = vectors.rows;
  if (static_cast<int>(domains.size()) != n)
    throw ShapeMismatch("cdp_similarity_report: domain count mismatch");
  std::set<std::pair<int, int>> selected;
  for (auto [i, j] : mask.selected) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw InvariantViolation("mask pair (" + std::to_string(i) + ", " + std::to_string(j) +
                               ") out of range");
    if (domains[i] == domains[j])
      throw InvariantViolation("mask pair (" + std::to_string(i) + ", " + std::to_string(j) +
                               ") is same-domain");
    selected.emplace(i, j);
  }

  const Matrix u = unit_rows(vectors);
  CdpSimilarityReport rep;
  rep.space = std::move(space_name);
  double sum_all = 0.0, sum_sel = 0.0, sum_rem = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (domains[i] == domains[j]) continue;
      const double cs = row_dot(u, i, j);
      rep.all_count += 1;
      sum_all += cs;
      if (selected.count({i, j})) {
        rep.transformed_count += 1;
        sum_sel += cs;
      } else {
        rep.remaining_count += 1;
        sum_rem += cs;
      }
    }
  if (rep.all_count > 0) rep.all_mean = sum_all / rep.all_count;
  if (rep.transformed_count > 0) rep.transformed_mean = sum_sel / rep.transformed_count;
  if (rep.remaining_count > 0) rep.remaining_mean = sum_rem / rep.remaining_count;
  return rep;
}

void validate(const ProbeConfig& cfg) {
  if (cfg.steps <= 0) throw ConfigInvalid("probe steps must be positive");
  if (!(cfg.lr > 0.0)) throw ConfigInvalid("probe lr must be positive");
  if (cfg.weight_decay < 0.0) throw ConfigInvalid("probe weight_decay must be nonnegative");
}

namespace {

void check_labels(const std::vector<int>& labels, int n, int num_classes, const char* where) {
  if (static_cast<int>(labels.size()) != n)
    throw ShapeMismatch(std::string(where) + ": label count mismatch");
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw InvariantViolation(std::string(where) + ": label " + std::to_string(y) +
                               " outside [0, " + std::to_string(num_classes) + ")");
}

}  // namespace

ProbeModel fit_probe(const Matrix& train_emb, const std::vector<int>& train_labels,
                     int num_classes, const ProbeConfig& cfg) {
  validate(cfg);
  const int n = train_emb.rows;
  const int d = train_emb.cols;
  if (num_classes < 2) throw DegenerateLabels("probe needs at least 2 classes");
  check_labels(train_labels, n, num_classes, "fit_probe");
  std::set<int> distinct(train_labels.begin(), train_labels.end());
  if (distinct.size() < 2)
    throw DegenerateLabels("train split holds a single class (" +
                           std::to_string(*distinct.begin()) + ")");

  ProbeModel model;
  model.num_classes = num_classes;
  model.w = Matrix(d + 1, num_classes);
  Rng rng(cfg.seed);
  for (double& v : model.w.data) v = 0.01 * rng.normal();

  Matrix logits(n, num_classes), probs(n, num_classes), grad(d + 1, num_classes);
  for (int step = 0; step < cfg.steps; ++step) {
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < num_classes; ++k) {
        double z = model.w.at(d, k);  // bias row
        for (int c = 0; c < d; ++c) z += train_emb.at(i, c) * model.w.at(c, k);
        logits.at(i, k) = z;
      }
    for (int i = 0; i < n; ++i) {
      double mx = logits.at(i, 0);
      for (int k = 1; k < num_classes; ++k) mx = std::max(mx, logits.at(i, k));
      double z = 0.0;
      for (int k = 0; k < num_classes; ++k) {
        probs.at(i, k) = std::exp(logits.at(i, k) - mx);
        z += probs.at(i, k);
      }
      for (int k = 0; k < num_classes; ++k) probs.at(i, k) /= z;
      probs.at(i, train_labels[i]) -= 1.0;
    }
    std::fill(grad.data.begin(), grad.data.end(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < num_classes; ++k) {
        const double g = probs.at(i, k) / n;
        for (int c = 0; c < d; ++c) grad.at(c, k) += train_emb.at(i, c) * g;
        grad.at(d, k) += g;
      }
    for (int c = 0; c < d; ++c)  // L2 penalty skips the bias row
      for (int k = 0; k < num_classes; ++k) grad.at(c, k) += cfg.weight_decay * model.w.at(c, k);
    for (std::size_t k = 0; k < model.w.data.size(); ++k)
      model.w.data[k] -= cfg.lr * grad.data[k];
  }
  return model;
}

double score_probe(const ProbeModel& model, const Matrix& emb, const std::vector<int>& labels) {
  const int n = emb.rows;
  const int d = emb.cols;
  if (d + 1 != model.w.rows) throw ShapeMismatch("score_probe: embedding width mismatch");
  check_labels(labels, n, model.num_classes, "score_probe");
  if (n == 0) throw ShapeMismatch("score_probe: empty evaluation split");
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double bz = -1e300;
    for (int k = 0; k < model.num_classes; ++k) {
      double z = model.w.at(d, k);
      for (int c = 0; c < d; ++c) z += emb.at(i, c) * model.w.at(c, k);
      if (z > bz) {
        bz = z;
        best = k;
      }
    }
    if (best == labels[i]) correct += 1;
  }
  return static_cast<double>(correct) / n;
}

double linear_probe(const Matrix& train_emb, const std::vector<int>& train_labels,
                    const Matrix& test_emb, const std::vector<int>& test_labels,
                    const ProbeConfig& cfg) {
  int num_classes = 0;
  for (int y : train_labels) num_classes = std::max(num_classes, y + 1);
  for (int y : test_labels) num_classes = std::max(num_classes, y + 1);
  ProbeModel model = fit_probe(train_emb, train_labels, num_classes, cfg);
  return score_probe(model, test_emb, test_labels);
}

void export_embeddings(const Matrix& h, const std::vector<int>& domains,
                       const std::vector<int>& labels, const std::string& path) {
  if (static_cast<int>(domains.size()) != h.rows || static_cast<int>(labels.size()) != h.rows)
    throw ShapeMismatch("export_embeddings: domain/label count mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing: " + std::strerror(errno));
  out << "node_id,domain,label";
  for (int c = 0; c < h.cols; ++c) out << ",e" << c;
  out << "\n";
  for (int i = 0; i < h.rows; ++i) {
    out << i << "," << domains[i] << "," << labels[i];
    for (int c = 0; c < h.cols; ++c) out << "," << fmt_double(h.at(i, c));
    out << "\n";
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const std::vector<std::string> header = split(line, ',');
  if (header.size() < 4 || header[0] != "node_id" || header[1] != "domain" ||
      header[2] != "label")
    throw ParseError(path + ": unexpected header");
  const int dim = static_cast<int>(header.size()) - 3;

  EmbeddingTable t;
  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (static_cast<int>(f.size()) != dim + 3)
      throw ParseError(path + " row " + std::to_string(rows) + ": expected " +
                       std::to_string(dim + 3) + " fields, got " + std::to_string(f.size()));
    if (parse_int(f[0]) != rows)
      throw ParseError(path + " row " + std::to_string(rows) + ": node_id out of order");
    t.domains.push_back(static_cast<int>(parse_int(f[1])));
    t.labels.push_back(static_cast<int>(parse_int(f[2])));
    for (int c = 0; c < dim; ++c) values.push_back(parse_double(f[3 + c]));
    rows += 1;
  }
  t.h = Matrix(rows, dim);
  t.h.data = std::move(values);
  return t;
}

}  // namespace nap
