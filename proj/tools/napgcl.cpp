#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nap/checkpoint.hpp"
#include "nap/encoder.hpp"
#include "nap/errors.hpp"
#include "nap/graph_io.hpp"
#include "nap/metrics.hpp"
#include "nap/synthetic.hpp"
#include "nap/text.hpp"
#include "nap/trainer.hpp"

namespace {

using namespace nap;

struct SplitFlags {
  std::vector<int> source;
  std::vector<int> validation;
  std::vector<int> target;
  std::vector<int> counts{4, 1, 1};
  std::uint64_t split_seed = 0;
};

void add_split_flags(CLI::App* cmd, SplitFlags& s) {
  cmd->add_option("--source-domains", s.source, "Explicit source domain ids")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--val-domains", s.validation, "Explicit validation domain ids")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--target-domains", s.target, "Explicit target domain ids")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--split-counts", s.counts,
                  "source,val,target domain counts for a seeded random split")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  cmd->add_option("--split-seed", s.split_seed, "Seed for the random domain split")
      ->capture_default_str();
}

DomainSplit resolve_split(const SplitFlags& s, const Graph& g) {
  if (!s.source.empty() || !s.validation.empty() || !s.target.empty()) {
    if (s.source.empty() || s.validation.empty())
      throw ConfigInvalid("an explicit split needs --source-domains and --val-domains");
    DomainSplit split;
    split.source = s.source;
    split.validation = s.validation;
    split.target = s.target;
    return split;
  }
  return make_split(g.num_domains, s.counts[0], s.counts[1], s.counts[2], s.split_seed);
}

void add_encoder_flags(CLI::App* cmd, EncoderConfig& e) {
  cmd->add_option("--hidden-dim", e.hidden_dim, "Hidden layer width")->capture_default_str();
  cmd->add_option("--embed-dim", e.embed_dim, "Embedding width")->capture_default_str();
  cmd->add_option("--layers", e.num_layers, "Encoder layer count")->capture_default_str();
  cmd->add_flag("--projection-head", e.projection_head,
                "Apply a two-layer projection head before the loss")
      ->capture_default_str();
  cmd->add_option("--proj-dim", e.proj_dim, "Projection width (0 keeps embed-dim)")
      ->capture_default_str();
}

void add_probe_flags(CLI::App* cmd, ProbeConfig& p) {
  cmd->add_option("--probe-steps", p.steps, "Probe gradient steps")->capture_default_str();
  cmd->add_option("--probe-lr", p.lr, "Probe learning rate")->capture_default_str();
  cmd->add_option("--probe-wd", p.weight_decay, "Probe L2 penalty")->capture_default_str();
  cmd->add_option("--probe-seed", p.seed, "Probe init seed")->capture_default_str();
}

void add_common_train_flags(CLI::App* cmd, TrainConfig& cfg) {
  cmd->add_option("--tau", cfg.loss.tau, "Contrastive temperature")->capture_default_str();
  cmd->add_option("--epochs", cfg.epochs, "Total training epochs")->capture_default_str();
  cmd->add_option("--eval-every", cfg.eval_every, "Epochs between evaluations")
      ->capture_default_str();
  cmd->add_option("--lr", cfg.adam.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--beta1", cfg.adam.beta1, "Adam first-moment decay")->capture_default_str();
  cmd->add_option("--beta2", cfg.adam.beta2, "Adam second-moment decay")->capture_default_str();
  cmd->add_option("--adam-eps", cfg.adam.eps, "Adam epsilon")->capture_default_str();
  cmd->add_option("--drop-edge-a", cfg.aug_alpha.drop_edge_prob,
                  "Edge drop probability, first view")
      ->capture_default_str();
  cmd->add_option("--mask-feat-a", cfg.aug_alpha.mask_feature_prob,
                  "Feature mask probability, first view")
      ->capture_default_str();
  cmd->add_option("--drop-edge-b", cfg.aug_beta.drop_edge_prob,
                  "Edge drop probability, second view")
      ->capture_default_str();
  cmd->add_option("--mask-feat-b", cfg.aug_beta.mask_feature_prob,
                  "Feature mask probability, second view")
      ->capture_default_str();
  add_encoder_flags(cmd, cfg.encoder);
  add_probe_flags(cmd, cfg.probe);
}

EncoderParams params_from_checkpoint(const Checkpoint& ck, const Graph& g, EncoderConfig enc) {
  enc.in_dim = g.num_features;
  validate(enc);
  EncoderParams params = init_encoder(enc, 0);
  std::vector<ParamTensor*> ptrs = all_params(params);
  if (ptrs.size() != ck.params.size())
    throw ConfigInvalid("checkpoint holds " + std::to_string(ck.params.size()) +
                        " matrices, encoder flags describe " + std::to_string(ptrs.size()));
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    if (!ptrs[i]->value.same_shape(ck.params[i]))
      throw ConfigInvalid("checkpoint matrix " + std::to_string(i) +
                          " does not match the encoder flags");
    ptrs[i]->value = ck.params[i];
    ptrs[i]->grad.reset();
  }
  return params;
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

void setup_generate(CLI::App& app) {
  auto cfg = std::make_shared<SyntheticConfig>();
  auto out = std::make_shared<std::string>();
  CLI::App* cmd = app.add_subcommand("generate", "Write a synthetic multi-domain graph file");
  cmd->set_config("--config", "", "Read flag values from an INI file");
  cmd->add_option("--num-domains", cfg->num_domains, "Domain count")->capture_default_str();
  cmd->add_option("--num-classes", cfg->num_classes, "Class count")->capture_default_str();
  cmd->add_option("--nodes-per-domain", cfg->nodes_per_domain, "Nodes in each domain")
      ->capture_default_str();
  cmd->add_option("--num-features", cfg->num_features, "Feature width")->capture_default_str();
  cmd->add_option("--intra-prob", cfg->intra_class_edge_prob,
                  "Same-class edge probability inside a domain")
      ->capture_default_str();
  cmd->add_option("--inter-prob", cfg->inter_class_edge_prob,
                  "Different-class edge probability inside a domain")
      ->capture_default_str();
  cmd->add_option("--class-signal", cfg->class_signal_strength,
                  "Domain-invariant class feature strength")
      ->capture_default_str();
  cmd->add_option("--domain-shift", cfg->domain_shift_strength,
                  "Per-domain feature mean shift strength")
      ->capture_default_str();
  cmd->add_option("--noise-std", cfg->noise_std, "Feature noise standard deviation")
      ->capture_default_str();
  cmd->add_option("--seed", cfg->seed, "Generator seed")->capture_default_str();
  cmd->add_option("--out", *out, "Output graph file")->required();
  cmd->callback([cfg, out] {
    save_graph(generate(*cfg), *out);
    std::cout << "wrote " << *out << "\n";
  });
}

void setup_train(CLI::App& app) {
  auto cfg = std::make_shared<TrainConfig>();
  auto split = std::make_shared<SplitFlags>();
  auto graph_path = std::make_shared<std::string>();
  auto refresh = std::make_shared<std::string>("every-epoch");
  CLI::App* cmd = app.add_subcommand("train", "Run the two-stage contrastive training");
  cmd->set_config("--config", "", "Read flag values from an INI file");
  cmd->add_option("--graph", *graph_path, "Input graph file")->required();
  cmd->add_option("--out", cfg->out_dir, "Output directory")->capture_default_str();
  cfg->out_dir = "run";
  cmd->get_option("--out")->default_str("run");
  cmd->add_option("--seed", cfg->seed, "Run seed")->capture_default_str();
  cmd->add_option("--nap-ratio", cfg->loss.nap_ratio,
                  "Fraction of cross-domain entries promoted to positives")
      ->capture_default_str();
  cmd->add_option("--warmup-epochs", cfg->loss.warmup_epochs,
                  "Epochs before promotion starts")
      ->capture_default_str();
  cmd->add_option("--mask-refresh", *refresh,
                  "Promotion mask policy: every-epoch or once")
      ->capture_default_str();
  cmd->add_flag("--mask-dump", cfg->dump_mask, "Write selected pairs to mask.csv")
      ->capture_default_str();
  cmd->add_option("--resume", cfg->resume_path, "Continue from a checkpoint file")
      ->capture_default_str();
  add_common_train_flags(cmd, *cfg);
  add_split_flags(cmd, *split);
  cmd->callback([cfg, split, graph_path, refresh, cmd] {
    if (*refresh == "every-epoch")
      cfg->mask_refresh = MaskRefresh::EveryEpoch;
    else if (*refresh == "once")
      cfg->mask_refresh = MaskRefresh::Once;
    else
      throw ConfigInvalid("--mask-refresh must be every-epoch or once, got \"" + *refresh + "\"");
    const Graph g = load_graph(*graph_path);
    const DomainSplit resolved = resolve_split(*split, g);
    std::filesystem::create_directories(cfg->out_dir);
    std::ofstream ini(cfg->out_dir + "/config.ini");
    ini << cmd->config_to_str(true, true);
    ini.close();
    const TrainResult res = train(g, resolved, *cfg);
    std::cout << "best_epoch," << res.best_epoch << "\n"
              << "best_val_acc," << fmt_double(res.best_val_acc) << "\n"
              << "best_target_acc," << opt_str(res.best_record.target_acc) << "\n"
              << "final_pdd," << fmt_double(res.records.back().pdd) << "\n"
              << "final_mask_size," << res.final_mask.selected.size() << "\n";
  });
}

void setup_eval(CLI::App& app) {
  auto graph_path = std::make_shared<std::string>();
  auto ckpt_path = std::make_shared<std::string>();
  auto export_path = std::make_shared<std::string>();
  auto enc = std::make_shared<EncoderConfig>();
  auto probe_cfg = std::make_shared<ProbeConfig>();
  auto split = std::make_shared<SplitFlags>();
  CLI::App* cmd = app.add_subcommand("eval", "Probe accuracies of a checkpoint per split");
  cmd->set_config("--config", "", "Read flag values from an INI file");
  cmd->add_option("--graph", *graph_path, "Graph file")->required();
  cmd->add_option("--checkpoint", *ckpt_path, "Checkpoint file")->required();
  cmd->add_option("--export-embeddings", *export_path,
                  "Also write full-graph embeddings to this file");
  add_encoder_flags(cmd, *enc);
  add_probe_flags(cmd, *probe_cfg);
  add_split_flags(cmd, *split);
  cmd->callback([graph_path, ckpt_path, export_path, enc, probe_cfg, split] {
    const Graph g = load_graph(*graph_path);
    const DomainSplit resolved = resolve_split(*split, g);
    EncoderParams params = params_from_checkpoint(load_checkpoint(*ckpt_path), g, *enc);
    const Matrix emb = encode(normalized_adjacency(g), g.features, params);
    if (!export_path->empty()) export_embeddings(emb, g.domains, g.labels, *export_path);

    auto rows_of = [&](const std::vector<int>& ids, Matrix& m, std::vector<int>& y) {
      std::vector<int> nodes;
      for (int i = 0; i < g.num_nodes; ++i)
        for (int d : ids)
          if (g.domains[i] == d) {
            nodes.push_back(i);
            break;
          }
      m = Matrix(static_cast<int>(nodes.size()), emb.cols);
      for (std::size_t r = 0; r < nodes.size(); ++r) {
        for (int c = 0; c < emb.cols; ++c) m.at(static_cast<int>(r), c) = emb.at(nodes[r], c);
        y.push_back(g.labels[nodes[r]]);
      }
    };
    Matrix src_m, val_m, tgt_m;
    std::vector<int> src_y, val_y, tgt_y;
    rows_of(resolved.source, src_m, src_y);
    rows_of(resolved.validation, val_m, val_y);
    rows_of(resolved.target, tgt_m, tgt_y);
    const ProbeModel model = fit_probe(src_m, src_y, g.num_classes, *probe_cfg);
    std::cout << "split,accuracy\n";
    std::cout << "source," << fmt_double(score_probe(model, src_m, src_y)) << "\n";
    std::cout << "validation," << fmt_double(score_probe(model, val_m, val_y)) << "\n";
    if (!tgt_y.empty())
      std::cout << "target," << fmt_double(score_probe(model, tgt_m, tgt_y)) << "\n";
  });
}

void setup_pdd(CLI::App& app) {
  auto emb_path = std::make_shared<std::string>();
  CLI::App* cmd = app.add_subcommand("pdd", "Pairwise domain discrepancy of an embedding export");
  cmd->set_config("--config", "", "Read flag values from an INI file");
  cmd->add_option("--embeddings", *emb_path, "Embedding export file")->required();
  cmd->callback([emb_path] {
    const EmbeddingTable t = load_embeddings(*emb_path);
    write_pdd_report(pdd(t.h, t.domains), std::cout);
  });
}

void setup_ablate(CLI::App& app) {
  auto cfg = std::make_shared<TrainConfig>();
  auto split = std::make_shared<SplitFlags>();
  auto graph_path = std::make_shared<std::string>();
  auto q_values = std::make_shared<std::vector<double>>(std::vector<double>{0.0, 0.5, 1.0});
  auto seeds = std::make_shared<std::vector<std::uint64_t>>(std::vector<std::uint64_t>{1, 2, 3});
  CLI::App* cmd = app.add_subcommand(
      "ablate-cdp", "Train with cross-domain negatives removed at several ratios");
  cmd->set_config("--config", "", "Read flag values from an INI file");
  cmd->add_option("--graph", *graph_path, "Input graph file")->required();
  cfg->out_dir = "ablation";
  cmd->add_option("--out", cfg->out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--q-values", *q_values, "Removal ratios")->delimiter(',')->capture_default_str();
  cmd->add_option("--seeds", *seeds, "Seeds averaged per ratio")
      ->delimiter(',')
      ->capture_default_str();
  add_common_train_flags(cmd, *cfg);
  add_split_flags(cmd, *split);
  cmd->callback([cfg, split, graph_path, q_values, seeds] {
    const Graph g = load_graph(*graph_path);
    const DomainSplit resolved = resolve_split(*split, g);
    const auto rows = run_ablation_cdp_removal(g, resolved, *cfg, *q_values, *seeds);
    std::cout << "q,mean_final_pdd\n";
    for (const AblationRow& row : rows)
      std::cout << fmt_double(row.q) << "," << fmt_double(row.mean_final_pdd) << "\n";
  });
}

void setup_report(CLI::App& app) {
  auto graph_path = std::make_shared<std::string>();
  auto ckpt_path = std::make_shared<std::string>();
  auto mask_path = std::make_shared<std::string>();
  auto enc = std::make_shared<EncoderConfig>();
  auto split = std::make_shared<SplitFlags>();
  CLI::App* cmd = app.add_subcommand(
      "report-cdp-sim", "Mean cosine similarity of promoted / all / remaining cross-domain pairs");
  cmd->set_config("--config", "", "Read flag values from an INI file");
  cmd->add_option("--graph", *graph_path, "Graph file")->required();
  cmd->add_option("--checkpoint", *ckpt_path, "Checkpoint file")->required();
  cmd->add_option("--mask", *mask_path, "mask.csv written by train --mask-dump")->required();
  add_encoder_flags(cmd, *enc);
  add_split_flags(cmd, *split);
  cmd->callback([graph_path, ckpt_path, mask_path, enc, split] {
    const Graph g = load_graph(*graph_path);
    const DomainSplit resolved = resolve_split(*split, g);
    const Subgraph sub = extract_domains(g, resolved.source);
    EncoderParams params = params_from_checkpoint(load_checkpoint(*ckpt_path), g, *enc);
    const Matrix emb = encode(normalized_adjacency(sub.graph), sub.graph.features, params);

    const std::vector<MaskDumpRow> rows = read_mask_dump(*mask_path);
    if (rows.empty()) throw ParseError(*mask_path + ": no mask rows");
    int last_epoch = rows.front().epoch;
    for (const MaskDumpRow& r : rows) last_epoch = std::max(last_epoch, r.epoch);
    SimilarityMask mask;
    mask.epoch = last_epoch;
    for (const MaskDumpRow& r : rows)
      if (r.epoch == last_epoch) mask.selected.emplace_back(r.i, r.j);
    mask.r = static_cast<long long>(mask.selected.size());

    std::cout << "space,set,count,mean_cosine\n";
    for (const char* space : {"features", "embeddings"}) {
      const Matrix& vectors = std::string(space) == "features" ? sub.graph.features : emb;
      const CdpSimilarityReport rep =
          cdp_similarity_report(vectors, sub.graph.domains, mask, space);
      auto line = [&](const char* set, long long count, const std::optional<double>& mean) {
        std::cout << rep.space << "," << set << "," << count << ","
                  << (mean ? fmt_double(*mean) : std::string()) << "\n";
      };
      line("all", rep.all_count, rep.all_mean);
      line("transformed", rep.transformed_count, rep.transformed_mean);
      line("remaining", rep.remaining_count, rep.remaining_mean);
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage graph contrastive learning with cross-domain pair promotion"};
  app.require_subcommand(1);
  setup_generate(app);
  setup_train(app);
  setup_eval(app);
  setup_pdd(app);
  setup_ablate(app);
  setup_report(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const ConfigInvalid& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const TooFewDomains& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
