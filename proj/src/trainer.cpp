#include "nap/trainer.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nap/checkpoint.hpp"
#include "nap/errors.hpp"
#include "nap/rng.hpp"
#include "nap/tensor.hpp"
#include "nap/text.hpp"

namespace nap {

const char* const kMetricsHeader = "epoch,stage,loss,pdd,val_acc,target_acc,mask_size";

void validate(const TrainConfig& cfg) {
  validate(cfg.loss);
  validate(cfg.aug_alpha);
  validate(cfg.aug_beta);
  validate(cfg.adam);
  validate(cfg.probe);
  if (cfg.epochs < 1) throw ConfigInvalid("epochs must be positive");
  if (cfg.eval_every < 1) throw ConfigInvalid("eval_every must be at least 1");
  if (cfg.loss.warmup_epochs > cfg.epochs)
    throw ConfigInvalid("warmup_epochs (" + std::to_string(cfg.loss.warmup_epochs) +
                        ") exceeds epochs (" + std::to_string(cfg.epochs) + ")");
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::uint64_t config_hash(const TrainConfig& cfg) {
  std::ostringstream o;
  o << "tau=" << fmt_double(cfg.loss.tau) << ";rho=" << fmt_double(cfg.loss.nap_ratio)
    << ";n=" << cfg.loss.warmup_epochs << ";q=" << fmt_double(cfg.loss.cdp_removal_ratio)
    << ";aa=" << fmt_double(cfg.aug_alpha.drop_edge_prob) << ","
    << fmt_double(cfg.aug_alpha.mask_feature_prob)
    << ";ab=" << fmt_double(cfg.aug_beta.drop_edge_prob) << ","
    << fmt_double(cfg.aug_beta.mask_feature_prob) << ";enc=" << cfg.encoder.in_dim << ","
    << cfg.encoder.hidden_dim << "," << cfg.encoder.embed_dim << "," << cfg.encoder.num_layers
    << "," << (cfg.encoder.projection_head ? 1 : 0) << "," << cfg.encoder.proj_dim
    << ";adam=" << fmt_double(cfg.adam.lr) << "," << fmt_double(cfg.adam.beta1) << ","
    << fmt_double(cfg.adam.beta2) << "," << fmt_double(cfg.adam.eps)
    << ";probe=" << cfg.probe.steps << "," << fmt_double(cfg.probe.lr) << ","
    << fmt_double(cfg.probe.weight_decay) << "," << cfg.probe.seed << ";ee=" << cfg.eval_every
    << ";seed=" << cfg.seed << ";refresh=" << (cfg.mask_refresh == MaskRefresh::Once ? 1 : 0)
    << ";removal=" << (cfg.use_removal_loss ? 1 : 0);
  return fnv1a64(o.str());
}

std::string format_metrics_row(const MetricsRecord& rec) {
  std::ostringstream o;
  o << rec.epoch << "," << rec.stage << "," << fmt_double(rec.loss) << "," << fmt_double(rec.pdd)
    << "," << fmt_double(rec.val_acc) << ","
    << (rec.target_acc ? fmt_double(*rec.target_acc) : std::string()) << "," << rec.mask_size;
  return o.str();
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw ParseError(path + ": missing metrics header");
  std::vector<MetricsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 7)
      throw ParseError(path + " row " + std::to_string(out.size()) + ": expected 7 fields");
    MetricsRecord r;
    r.epoch = static_cast<int>(parse_int(f[0]));
    r.stage = f[1];
    if (r.stage != "warmup" && r.stage != "nap")
      throw ParseError(path + ": unknown stage \"" + r.stage + "\"");
    r.loss = parse_double(f[2]);
    r.pdd = parse_double(f[3]);
    r.val_acc = parse_double(f[4]);
    if (!f[5].empty()) r.target_acc = parse_double(f[5]);
    r.mask_size = parse_int(f[6]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MaskDumpRow> read_mask_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  std::string line;
  if (!std::getline(in, line) || line != "epoch,i,j,similarity")
    throw ParseError(path + ": missing mask dump header");
  std::vector<MaskDumpRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 4)
      throw ParseError(path + " row " + std::to_string(out.size()) + ": expected 4 fields");
    out.push_back({static_cast<int>(parse_int(f[0])), static_cast<int>(parse_int(f[1])),
                   static_cast<int>(parse_int(f[2])), parse_double(f[3])});
  }
  return out;
}

namespace {

void check_split(const Graph& g, const DomainSplit& split) {
  if (split.source.size() < 2)
    throw ConfigInvalid("need at least 2 source domains for cross-domain training");
  if (split.validation.empty()) throw ConfigInvalid("validation domain list is empty");
  std::set<int> seen;
  auto check_role = [&](const std::vector<int>& ids, const char* role) {
    for (int d : ids) {
      if (d < 0 || d >= g.num_domains)
        throw ConfigInvalid(std::string(role) + " domain " + std::to_string(d) +
                            " not in graph (P=" + std::to_string(g.num_domains) + ")");
      if (!seen.insert(d).second)
        throw ConfigInvalid("domain " + std::to_string(d) + " appears in two roles");
    }
  };
  check_role(split.source, "source");
  check_role(split.validation, "validation");
  check_role(split.target, "target");
}

std::vector<int> nodes_of_domains(const Graph& g, const std::vector<int>& ids) {
  std::set<int> want(ids.begin(), ids.end());
  std::vector<int> out;
  for (int i = 0; i < g.num_nodes; ++i)
    if (want.count(g.domains[i])) out.push_back(i);
  return out;
}

Matrix take_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<int>(idx.size()), m.cols);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (int c = 0; c < m.cols; ++c) out.at(static_cast<int>(r), c) = m.at(idx[r], c);
  return out;
}

std::vector<int> take(const std::vector<int>& v, const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(v[i]);
  return out;
}

EncoderParams clone_params(const EncoderParams& p) { return p; }

std::vector<Matrix> param_matrices(EncoderParams& p) {
  std::vector<Matrix> out;
  for (ParamTensor* t : all_params(p)) out.push_back(t->value);
  return out;
}

void load_params_into(EncoderParams& p, const std::vector<Matrix>& mats, const char* where) {
  std::vector<ParamTensor*> ptrs = all_params(p);
  if (ptrs.size() != mats.size())
    throw ConfigInvalid(std::string(where) + " holds " + std::to_string(mats.size()) +
                        " matrices, encoder expects " + std::to_string(ptrs.size()));
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    if (!ptrs[i]->value.same_shape(mats[i]))
      throw ConfigInvalid(std::string(where) + " matrix " + std::to_string(i) +
                          " has a different shape than the configured encoder");
    ptrs[i]->value = mats[i];
    ptrs[i]->grad.reset();
  }
}

class FlushedFile {
 public:
  void open(const std::string& path, bool append, const std::string& header) {
    const bool exists = std::filesystem::exists(path);
    out_.open(path, append ? std::ios::app : std::ios::out);
    if (!out_) throw IoError("cannot open " + path + ": " + std::strerror(errno));
    path_ = path;
    if (!append || !exists) line(header);
  }
  bool is_open() const { return out_.is_open(); }
  void line(const std::string& s) {
    out_ << s << "\n";
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace

TrainResult train(const Graph& g, const DomainSplit& split, const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  cfg.encoder.in_dim = g.num_features;
  validate(cfg);
  validate(cfg.encoder);
  require_valid(g);
  check_split(g, split);

  const Subgraph sub = extract_domains(g, split.source);
  const std::vector<int>& src_domains = sub.graph.domains;
  const long long cross_count = count_cross_domain_pairs(src_domains);
  const long long r_target = promote_count(cfg.loss.nap_ratio, cross_count);
  const std::uint64_t hash = config_hash(cfg);

  EncoderParams params = init_encoder(cfg.encoder, derive_seed(cfg.seed, 1));
  OptimizerState opt = make_optimizer(all_params(params), cfg.adam);
  const std::uint64_t epoch_base = derive_seed(cfg.seed, 2);

  TrainResult result;
  result.best_params = clone_params(params);
  OptimizerState best_opt = opt;
  std::optional<SimilarityMask> cached_mask;
  int start_epoch = 0;

  if (!cfg.resume_path.empty()) {
    Checkpoint ck = load_checkpoint(cfg.resume_path);
    if (ck.config_hash != hash)
      throw ConfigInvalid("checkpoint " + cfg.resume_path +
                          " was written under a different configuration");
    load_params_into(params, ck.params, "checkpoint");
    if (ck.opt.m.size() != all_params(params).size())
      throw ConfigInvalid("checkpoint optimizer state does not match the encoder");
    opt = std::move(ck.opt);
    if (ck.epoch > cfg.epochs)
      throw ConfigInvalid("checkpoint is at epoch " + std::to_string(ck.epoch) +
                          ", beyond the requested " + std::to_string(cfg.epochs));
    start_epoch = static_cast<int>(ck.epoch);
    result.best_val_acc = ck.best_val_acc;
    result.best_epoch = ck.best_epoch;
    cached_mask = std::move(ck.cached_mask);
    result.best_params = clone_params(params);
    best_opt = opt;
    if (ck.best_epoch >= 0 && !cfg.out_dir.empty()) {
      const std::string best_path = cfg.out_dir + "/best.ckpt";
      if (std::filesystem::exists(best_path))
        load_params_into(result.best_params, load_checkpoint(best_path).params, "best checkpoint");
    }
  }

  FlushedFile metrics_file, mask_file;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    metrics_file.open(cfg.out_dir + "/metrics.csv", !cfg.resume_path.empty(), kMetricsHeader);
    if (cfg.dump_mask)
      mask_file.open(cfg.out_dir + "/mask.csv", !cfg.resume_path.empty(), "epoch,i,j,similarity");
  }

  // Evaluation inputs: the clean full graph. Domains are disjoint
  // components, so full-graph embeddings restricted to source nodes equal
  // the source-subgraph embeddings.
  const NormalizedAdjacency full_adj = normalized_adjacency(g);
  const std::vector<int> val_nodes = nodes_of_domains(g, split.validation);
  const std::vector<int> tgt_nodes = nodes_of_domains(g, split.target);
  const std::vector<int> src_labels = take(g.labels, sub.orig_nodes);
  const std::vector<int> val_labels = take(g.labels, val_nodes);
  const std::vector<int> tgt_labels = take(g.labels, tgt_nodes);

  auto save_state = [&](const std::string& path, EncoderParams& p, OptimizerState& o,
                        long long epoch) {
    Checkpoint ck;
    ck.config_hash = hash;
    ck.epoch = epoch;
    ck.params = param_matrices(p);
    ck.opt = o;
    ck.best_val_acc = result.best_val_acc;
    ck.best_epoch = result.best_epoch;
    ck.cached_mask = cached_mask;
    save_checkpoint(ck, path);
  };

  for (int e = start_epoch; e < cfg.epochs; ++e) {
    const std::uint64_t epoch_seed = derive_seed(epoch_base, static_cast<std::uint64_t>(e));
    auto views = make_views(sub.graph, cfg.aug_alpha, cfg.aug_beta, derive_seed(epoch_seed, 1));

    SimilarityMask mask;
    std::string stage = "warmup";
    double loss_value = 0.0;
    try {
      Tape tape;
      Tensor ha = gcn_forward(tape, views.first, params);
      Tensor hb = gcn_forward(tape, views.second, params);
      Tensor loss{nullptr, -1};
      if (cfg.use_removal_loss) {
        loss = cdp_removal_loss(tape, ha, hb, cfg.loss.cdp_removal_ratio,
                                derive_seed(epoch_seed, 2), cfg.loss, src_domains);
      } else if (e < cfg.loss.warmup_epochs) {
        loss = contrastive_loss(tape, ha, hb, mask, cfg.loss, src_domains);
      } else {
        stage = "nap";
        if (cfg.mask_refresh == MaskRefresh::EveryEpoch || !cached_mask) {
          const Matrix b = zero_same_domain(
              cosine_similarity_matrix(ha.value(), hb.value()), src_domains);
          mask = select_top_r(b, src_domains, r_target);
          mask.epoch = e;
          if (cfg.mask_refresh == MaskRefresh::Once) cached_mask = mask;
          if (mask_file.is_open())
            for (auto [i, j] : mask.selected)
              mask_file.line(std::to_string(e) + "," + std::to_string(i) + "," +
                             std::to_string(j) + "," + fmt_double(b.at(i, j)));
        } else {
          mask = *cached_mask;
        }
        result.final_mask = mask;
        loss = contrastive_loss(tape, ha, hb, mask, cfg.loss, src_domains);
      }
      loss_value = loss.value().at(0, 0);
      tape.backward(loss);
    } catch (const NonFiniteValue& err) {
      throw NonFiniteLoss("epoch " + std::to_string(e) + " (" + stage + " stage): " + err.what());
    }
    optimizer_step(params, opt);

    if ((e + 1) % cfg.eval_every == 0 || e + 1 == cfg.epochs) {
      const Matrix emb = encode(full_adj, g.features, params);
      const Matrix src_emb = take_rows(emb, sub.orig_nodes);
      MetricsRecord rec;
      rec.epoch = e;
      rec.stage = stage;
      rec.loss = loss_value;
      rec.pdd = pdd(src_emb, src_domains).value;
      const ProbeModel probe = fit_probe(src_emb, src_labels, g.num_classes, cfg.probe);
      rec.val_acc = score_probe(probe, take_rows(emb, val_nodes), val_labels);
      if (!tgt_nodes.empty())
        rec.target_acc = score_probe(probe, take_rows(emb, tgt_nodes), tgt_labels);
      rec.mask_size = static_cast<long long>(mask.selected.size());
      if (metrics_file.is_open()) metrics_file.line(format_metrics_row(rec));
      if (rec.val_acc > result.best_val_acc) {
        result.best_val_acc = rec.val_acc;
        result.best_epoch = e;
        result.best_record = rec;
        result.best_params = clone_params(params);
        best_opt = opt;
        if (!cfg.out_dir.empty())
          save_state(cfg.out_dir + "/best.ckpt", result.best_params, best_opt, e + 1);
      }
      result.records.push_back(std::move(rec));
    }
  }

  result.final_params = clone_params(params);
  if (!cfg.out_dir.empty()) save_state(cfg.out_dir + "/final.ckpt", params, opt, cfg.epochs);
  return result;
}

std::vector<AblationRow> run_ablation_cdp_removal(const Graph& g, const DomainSplit& split,
                                                  const TrainConfig& base,
                                                  const std::vector<double>& q_values,
                                                  const std::vector<std::uint64_t>& seeds) {
  if (q_values.empty()) throw ConfigInvalid("ablation needs at least one q value");
  if (seeds.empty()) throw ConfigInvalid("ablation needs at least one seed");
  std::vector<AblationRow> rows;
  for (std::size_t qi = 0; qi < q_values.size(); ++qi) {
    AblationRow row;
    row.q = q_values[qi];
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.use_removal_loss = true;
      cfg.loss.cdp_removal_ratio = q_values[qi];
      cfg.loss.warmup_epochs = 0;
      cfg.loss.nap_ratio = 0.0;
      cfg.seed = seed;
      cfg.resume_path.clear();
      cfg.dump_mask = false;
      if (!base.out_dir.empty())
        cfg.out_dir = base.out_dir + "/q" + std::to_string(qi) + "_seed" + std::to_string(seed);
      const TrainResult res = train(g, split, cfg);
      row.per_seed_pdd.push_back(res.records.back().pdd);
    }
    double s = 0.0;
    for (double v : row.per_seed_pdd) s += v;
    row.mean_final_pdd = s / static_cast<double>(row.per_seed_pdd.size());
    rows.push_back(std::move(row));
  }
  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    FlushedFile f;
    f.open(base.out_dir + "/ablation.csv", false, "q,mean_final_pdd");
    for (const AblationRow& row : rows)
      f.line(fmt_double(row.q) + "," + fmt_double(row.mean_final_pdd));
  }
  return rows;
}

}  // namespace nap
