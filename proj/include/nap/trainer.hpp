#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nap/adam.hpp"
#include "nap/augment.hpp"
#include "nap/encoder.hpp"
#include "nap/graph.hpp"
#include "nap/metrics.hpp"
#include "nap/objective.hpp"
#include "nap/synthetic.hpp"

namespace nap {

enum class MaskRefresh { EveryEpoch, Once };

/// Full description of one training run. `encoder.in_dim` is overwritten
/// from the graph; `out_dir` empty keeps the run entirely in memory.
struct TrainConfig {
  LossConfig loss;
  AugmentConfig aug_alpha{0.2, 0.3};
  AugmentConfig aug_beta{0.3, 0.2};
  EncoderConfig encoder;
  AdamConfig adam;
  ProbeConfig probe;
  int epochs = 200;
  int eval_every = 10;
  std::uint64_t seed = 0;
  MaskRefresh mask_refresh = MaskRefresh::EveryEpoch;
  bool use_removal_loss = false;  // ablation: removal objective for every epoch
  bool dump_mask = false;         // write mask.csv rows at each selection
  std::string out_dir;
  std::string resume_path;
};

/// Throws ConfigInvalid; covers sub-configs, warmup_epochs <= epochs, and
/// eval_every >= 1.
void validate(const TrainConfig& cfg);

/// Hash of every trajectory-affecting field (epochs and output paths are
/// excluded so a run can be extended and relocated); guards resume.
std::uint64_t config_hash(const TrainConfig& cfg);

/// One evaluation point. `epoch` is the 0-based index of the epoch the
/// evaluation ran after; `stage` is that epoch's stage.
struct MetricsRecord {
  int epoch = -1;
  std::string stage;
  double loss = 0.0;
  double pdd = 0.0;
  double val_acc = 0.0;
  std::optional<double> target_acc;
  long long mask_size = 0;
};

extern const char* const kMetricsHeader;  // epoch,stage,loss,pdd,val_acc,target_acc,mask_size

std::string format_metrics_row(const MetricsRecord& rec);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

/// Rows of a mask dump file (header epoch,i,j,similarity).
struct MaskDumpRow {
  int epoch;
  int i;
  int j;
  double similarity;
};
std::vector<MaskDumpRow> read_mask_dump(const std::string& path);

struct TrainResult {
  std::vector<MetricsRecord> records;  // this invocation's evaluation points
  EncoderParams final_params;
  EncoderParams best_params;  // highest validation accuracy, ties earliest
  MetricsRecord best_record;
  double best_val_acc = -1.0;
  long long best_epoch = -1;
  SimilarityMask final_mask;  // last promotion mask; empty if none was built
};

/// Two-stage protocol: warm-up objective for epochs < warmup_epochs, then
/// promotion epochs that rebuild the similarity mask (per refresh policy)
/// and optimize the combined objective. Every eval_every epochs (and at the
/// last epoch) the clean, un-augmented graph is embedded; source PDD and
/// probe accuracies are logged. When out_dir is set, writes metrics.csv
/// (each row flushed), best.ckpt on every improvement, final.ckpt at the
/// end, and optionally mask.csv. Throws NonFiniteLoss with epoch
/// diagnostics if the objective degenerates.
TrainResult train(const Graph& g, const DomainSplit& split, const TrainConfig& cfg);

struct AblationRow {
  double q = 0.0;
  double mean_final_pdd = 0.0;
  std::vector<double> per_seed_pdd;
};

/// Trains with the removal objective for each (q, seed), collecting the
/// final source PDD; rows ordered as q_values. Per-run outputs land in
/// out_dir/q<index>_seed<seed>/ when base.out_dir is set, plus a summary
/// ablation.csv.
std::vector<AblationRow> run_ablation_cdp_removal(const Graph& g, const DomainSplit& split,
                                                  const TrainConfig& base,
                                                  const std::vector<double>& q_values,
                                                  const std::vector<std::uint64_t>& seeds);

}  // namespace nap
