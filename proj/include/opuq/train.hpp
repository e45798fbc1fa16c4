#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "opuq/dataset.hpp"
#include "opuq/model.hpp"

namespace opuq {

enum class LossKind { Nll, Mse };

LossKind parse_loss(const std::string& name);
std::string loss_name(LossKind kind);

struct TrainConfig {
    double lr0 = 7.5e-4;
    std::size_t batch = 512;
    double decay = 0.95;
    std::size_t decay_every = 25000;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Nll;
    std::size_t trace_every = 100;
    std::string trace_path;      // when set, loss trace is written as step,loss,lr
    std::string checkpoint_dir;  // when set, checkpoints land here every 10% of steps
    std::vector<std::size_t> record_indices;  // records to train on; empty = all
};

/// Step-indexed learning rate: lr0 * decay^floor(step / decay_every).
double lr_at(const TrainConfig& cfg, std::size_t step);

/// Batch-mean loss node over already-traced (mu, log_sigma) columns and a
/// B x 1 target node: Gaussian NLL or plain squared error.
NodeId loss_graph(Tape& tape, LossKind kind, NodeId mu, NodeId log_sigma, NodeId target);

struct TracePoint {
    std::size_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    std::vector<TracePoint> trace;
    double final_loss = 0.0;
    std::size_t steps_run = 0;
};

/// Runs cfg.steps Adam updates over uniformly shuffled (record, eval-point)
/// pairs, batched cfg.batch at a time with epoch-wise reshuffling. The loss is
/// evaluated on the pre-update weights; a non-finite value aborts with the
/// step index in the message.
TrainResult train(OperatorModel& model, const Dataset& ds, const TrainConfig& cfg);

struct ScaleMetrics {
    double mse = 0.0;
    double mae = 0.0;
    double l1_rel = 0.0;
    double l2_rel = 0.0;
    std::size_t records = 0;
    std::size_t points = 0;
};

struct EvalReport {
    std::vector<std::pair<double, ScaleMetrics>> per_scale;  // ascending length scale
    ScaleMetrics pooled;
};

/// Pointwise predictions for one record at its stored eval points.
/// f_rescale multiplies the stored f-sensor values before the branch pass,
/// for evaluating a model against data normalized with a different f scale.
struct RecordPrediction {
    std::vector<double> mu;
    std::vector<double> sigma;
};
RecordPrediction predict_record(const OperatorModel& model, const Dataset& ds, std::size_t record,
                                double f_rescale = 1.0);

/// mse/mae pool every eval point; l1_rel/l2_rel are computed per record and
/// averaged. Records with an identically zero target vector are skipped in
/// the relative averages.
EvalReport evaluate(const OperatorModel& model, const Dataset& ds, double f_rescale = 1.0);
EvalReport evaluate(const OperatorModel& model, const Dataset& ds,
                    const std::vector<std::size_t>& records, double f_rescale = 1.0);

/// CSV with columns scale,mse,mae,l1_rel,l2_rel; one row per length-scale
/// class plus a trailing "pooled" row.
void write_metrics(const EvalReport& report, const std::string& path);
void write_trace(const std::vector<TracePoint>& trace, const std::string& path);

}  // namespace opuq
