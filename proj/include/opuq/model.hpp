#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "opuq/dense.hpp"
#include "opuq/tape.hpp"

namespace opuq {

/// Width lists for one tower: shared core layers, then per-head layers whose
/// last entry is the basis count.
struct MlpSpec {
    std::vector<std::size_t> core;
    std::vector<std::size_t> head;
};

struct ModelConfig {
    std::size_t branch_input = 164;
    std::size_t trunk_input = 2;
    MlpSpec branch{{50, 50, 50}, {50, 150}};
    MlpSpec trunk{{30, 30, 30}, {30, 150}};
    double slope = 0.01;          // leaky-relu negative-side slope
    double clip_lo = -15.0;       // log-sigma clamp
    double clip_hi = 5.0;
    double sigma_init_scale = 0.1;  // shrink factor for the sigma heads' final layers

    std::size_t basis() const { return branch.head.back(); }
};

struct PredictiveOutput {
    double mu = 0.0;
    double log_sigma = 0.0;
};

/// Two-tower mean/uncertainty network: a branch tower embeds the problem data,
/// a trunk tower embeds the query location, and inner products of the two
/// mu / sigma embeddings give the prediction and its log standard deviation.
/// Every layer is leaky-relu activated except the final layer of each branch
/// head, which stays linear; log sigma is clamped to [clip_lo, clip_hi].
class OperatorModel {
public:
    OperatorModel(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }

    struct Param {
        std::string name;
        DenseMatrix* value;
    };
    /// Stable registration order; pointers stay valid for the model's lifetime.
    std::vector<Param> parameters();
    std::size_t parameter_count() const;

    /// Scratch for the allocation-free single-point path.
    struct Workspace {
        std::vector<double> ping, pong;
        std::vector<double> core_out;
        std::vector<double> b_mu, b_sigma, t_mu, t_sigma;
    };
    Workspace make_workspace() const;

    PredictiveOutput forward(std::span<const double> branch_in, std::span<const double> x,
                             Workspace& ws) const;
    PredictiveOutput forward(std::span<const double> branch_in, std::span<const double> x) const;

    /// Branch tower only: mu and sigma embeddings for one problem instance.
    void branch_eval(std::span<const double> branch_in, std::vector<double>& mu_basis,
                     std::vector<double>& sigma_basis, Workspace& ws) const;
    /// Trunk tower over a batch of query points (rows of xs), one embedding row
    /// per point.
    void trunk_eval_batch(const DenseMatrix& xs, DenseMatrix& t_mu, DenseMatrix& t_sigma) const;
    /// Branch tower over a batch of inputs (rows), one embedding row per input.
    void branch_eval_batch(const DenseMatrix& inputs, DenseMatrix& b_mu,
                           DenseMatrix& b_sigma) const;

    /// Batched training graph over (branch row, trunk row) pairs. params lines
    /// up with parameters(); mu and log_sigma are B x 1.
    struct Traced {
        NodeId mu = -1;
        NodeId log_sigma = -1;
        std::vector<NodeId> params;
    };
    Traced trace(Tape& tape, const DenseMatrix& branch_rows, const DenseMatrix& trunk_rows) const;

    /// Trunk-only graph rooted at an existing (possibly differentiable) input
    /// node; returns the two embedding nodes.
    struct TracedTrunk {
        NodeId t_mu = -1;
        NodeId t_sigma = -1;
    };
    TracedTrunk trace_trunk(Tape& tape, NodeId x_node) const;

    /// Smallest |pre-activation| seen across all activated layers for this
    /// input; useful for steering finite-difference probes away from kinks.
    double kink_distance(std::span<const double> branch_in, std::span<const double> x) const;

private:
    struct Layer {
        DenseMatrix w;  // out x in
        DenseMatrix b;  // 1 x out
    };
    struct Tower {
        std::vector<Layer> core;
        std::vector<Layer> mu_head;
        std::vector<Layer> sigma_head;
    };

    ModelConfig cfg_;
    Tower branch_;
    Tower trunk_;

    enum class FinalLayer { Linear, Activated };

    void tower_eval(const Tower& tower, FinalLayer fin, std::span<const double> input,
                    std::vector<double>& mu_out, std::vector<double>& sigma_out, Workspace& ws,
                    double* min_preact) const;
    void tower_eval_batch(const Tower& tower, FinalLayer fin, const DenseMatrix& rows,
                          DenseMatrix& mu_out, DenseMatrix& sigma_out) const;
    NodeId trace_chain(Tape& tape, NodeId h, const std::vector<Layer>& layers,
                       std::vector<NodeId>& params, bool activate_last) const;
};

/// Binary model file: architecture + named metadata + flat weights.
void save_checkpoint(OperatorModel& model, const std::map<std::string, std::string>& meta,
                     const std::string& path);

struct LoadedModel {
    OperatorModel model;
    std::map<std::string, std::string> meta;
};
LoadedModel load_checkpoint(const std::string& path);

}  // namespace opuq
