#include "opuq/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "opuq/binio.hpp"
#include "opuq/csvio.hpp"
#include "opuq/rng.hpp"

namespace opuq {

namespace {

void validate(const ModelConfig& cfg) {
    if (cfg.branch_input == 0 || cfg.trunk_input == 0)
        throw std::invalid_argument("model: input widths must be positive");
    if (cfg.branch.head.empty() || cfg.trunk.head.empty())
        throw std::invalid_argument("model: each tower needs at least one head layer");
    if (cfg.branch.head.back() != cfg.trunk.head.back())
        throw std::invalid_argument("model: branch and trunk basis counts differ");
    if (cfg.branch.head.back() < 1) throw std::invalid_argument("model: basis count must be >= 1");
    for (const auto& spec : {cfg.branch, cfg.trunk})
        for (std::size_t w : spec.core)
            if (w == 0) throw std::invalid_argument("model: zero-width layer");
}

std::vector<std::size_t> chain_widths(std::size_t input, const std::vector<std::size_t>& widths) {
    std::vector<std::size_t> ws{input};
    ws.insert(ws.end(), widths.begin(), widths.end());
    return ws;
}

double activate(double v, double slope) { return v >= 0.0 ? v : slope * v; }

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
    std::vector<std::size_t> v;
    std::istringstream in(s);
    std::size_t x;
    while (in >> x) v.push_back(x);
    return v;
}

}  // namespace

OperatorModel::OperatorModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    validate(cfg_);
    Rng rng(seed);
    const auto init_layer = [&](std::size_t in, std::size_t out, double extra_scale) {
        Layer layer{DenseMatrix(out, in), DenseMatrix(1, out)};
        const double bound = std::sqrt(6.0 / static_cast<double>(in)) * extra_scale;
        for (double& v : layer.w.flat()) v = rng.uniform(-bound, bound);
        return layer;
    };
    const auto build_tower = [&](std::size_t input, const MlpSpec& spec) {
        Tower tower;
        const auto core_ws = chain_widths(input, spec.core);
        for (std::size_t i = 0; i + 1 < core_ws.size(); ++i)
            tower.core.push_back(init_layer(core_ws[i], core_ws[i + 1], 1.0));
        const std::size_t core_out = core_ws.back();
        const auto head_ws = chain_widths(core_out, spec.head);
        for (std::size_t i = 0; i + 1 < head_ws.size(); ++i)
            tower.mu_head.push_back(init_layer(head_ws[i], head_ws[i + 1], 1.0));
        for (std::size_t i = 0; i + 1 < head_ws.size(); ++i) {
            const bool last = i + 2 == head_ws.size();
            tower.sigma_head.push_back(
                init_layer(head_ws[i], head_ws[i + 1], last ? cfg_.sigma_init_scale : 1.0));
        }
        return tower;
    };
    branch_ = build_tower(cfg_.branch_input, cfg_.branch);
    trunk_ = build_tower(cfg_.trunk_input, cfg_.trunk);
}

std::vector<OperatorModel::Param> OperatorModel::parameters() {
    std::vector<Param> out;
    const auto walk = [&out](const std::string& prefix, std::vector<Layer>& layers) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            out.push_back({prefix + std::to_string(i) + ".w", &layers[i].w});
            out.push_back({prefix + std::to_string(i) + ".b", &layers[i].b});
        }
    };
    walk("branch.core", branch_.core);
    walk("branch.mu", branch_.mu_head);
    walk("branch.sigma", branch_.sigma_head);
    walk("trunk.core", trunk_.core);
    walk("trunk.mu", trunk_.mu_head);
    walk("trunk.sigma", trunk_.sigma_head);
    return out;
}

std::size_t OperatorModel::parameter_count() const {
    const auto count = [](const Tower& t) {
        return 2 * (t.core.size() + t.mu_head.size() + t.sigma_head.size());
    };
    return count(branch_) + count(trunk_);
}

OperatorModel::Workspace OperatorModel::make_workspace() const {
    std::size_t max_w = std::max(cfg_.branch_input, cfg_.trunk_input);
    std::size_t max_core = 1;
    for (const MlpSpec* spec : {&cfg_.branch, &cfg_.trunk}) {
        for (std::size_t w : spec->core) max_w = std::max(max_w, w);
        for (std::size_t w : spec->head) max_w = std::max(max_w, w);
        if (!spec->core.empty()) max_core = std::max(max_core, spec->core.back());
    }
    max_core = std::max({max_core, cfg_.branch_input, cfg_.trunk_input});
    Workspace ws;
    ws.ping.resize(max_w);
    ws.pong.resize(max_w);
    ws.core_out.resize(max_core);
    ws.b_mu.resize(cfg_.basis());
    ws.b_sigma.resize(cfg_.basis());
    ws.t_mu.resize(cfg_.basis());
    ws.t_sigma.resize(cfg_.basis());
    return ws;
}

void OperatorModel::tower_eval(const Tower& tower, FinalLayer fin, std::span<const double> input,
                               std::vector<double>& mu_out, std::vector<double>& sigma_out,
                               Workspace& ws, double* min_preact) const {
    const auto apply_chain = [&](const std::vector<Layer>& layers, std::span<const double> x,
                                 bool activate_last, std::span<double> out) {
        std::span<const double> cur = x;
        for (std::size_t li = 0; li < layers.size(); ++li) {
            const Layer& layer = layers[li];
            const std::size_t out_w = layer.w.rows();
            const bool last = li + 1 == layers.size();
            std::span<double> dst = last ? out.subspan(0, out_w)
                                         : std::span<double>(cur.data() == ws.ping.data() ? ws.pong
                                                                                          : ws.ping)
                                               .subspan(0, out_w);
            gemv(Trans::No, 1.0, layer.w, cur, 0.0, dst);
            const bool act = !last || activate_last;
            for (std::size_t j = 0; j < out_w; ++j) {
                const double pre = dst[j] + layer.b(0, j);
                if (act && min_preact) *min_preact = std::min(*min_preact, std::abs(pre));
                dst[j] = act ? activate(pre, cfg_.slope) : pre;
            }
            cur = dst;
        }
        if (layers.empty()) std::copy(x.begin(), x.end(), out.begin());
    };

    const std::size_t core_w = tower.core.empty() ? input.size() : tower.core.back().w.rows();
    apply_chain(tower.core, input, true, std::span<double>(ws.core_out).subspan(0, core_w));
    const std::span<const double> core(ws.core_out.data(), core_w);
    apply_chain(tower.mu_head, core, fin == FinalLayer::Activated, mu_out);
    apply_chain(tower.sigma_head, core, fin == FinalLayer::Activated, sigma_out);
}

PredictiveOutput OperatorModel::forward(std::span<const double> branch_in,
                                        std::span<const double> x, Workspace& ws) const {
    if (branch_in.size() != cfg_.branch_input)
        throw std::invalid_argument("model: branch input width mismatch");
    if (x.size() != cfg_.trunk_input)
        throw std::invalid_argument("model: trunk input width mismatch");
    tower_eval(branch_, FinalLayer::Linear, branch_in, ws.b_mu, ws.b_sigma, ws, nullptr);
    tower_eval(trunk_, FinalLayer::Activated, x, ws.t_mu, ws.t_sigma, ws, nullptr);
    PredictiveOutput out;
    out.mu = dot(ws.b_mu, ws.t_mu);
    out.log_sigma = std::clamp(dot(ws.b_sigma, ws.t_sigma), cfg_.clip_lo, cfg_.clip_hi);
    return out;
}

PredictiveOutput OperatorModel::forward(std::span<const double> branch_in,
                                        std::span<const double> x) const {
    Workspace ws = make_workspace();
    return forward(branch_in, x, ws);
}

void OperatorModel::branch_eval(std::span<const double> branch_in, std::vector<double>& mu_basis,
                                std::vector<double>& sigma_basis, Workspace& ws) const {
    if (branch_in.size() != cfg_.branch_input)
        throw std::invalid_argument("model: branch input width mismatch");
    mu_basis.resize(cfg_.basis());
    sigma_basis.resize(cfg_.basis());
    tower_eval(branch_, FinalLayer::Linear, branch_in, mu_basis, sigma_basis, ws, nullptr);
}

void OperatorModel::tower_eval_batch(const Tower& tower, FinalLayer fin, const DenseMatrix& rows,
                                     DenseMatrix& mu_out, DenseMatrix& sigma_out) const {
    const std::size_t n = rows.rows();
    const auto run_chain = [&](const std::vector<Layer>& layers, const DenseMatrix& x,
                               bool activate_last, DenseMatrix& out) {
        DenseMatrix cur = x;
        DenseMatrix next;
        for (std::size_t li = 0; li < layers.size(); ++li) {
            const Layer& layer = layers[li];
            next.resize(n, layer.w.rows());
            gemm(Trans::No, Trans::Yes, 1.0, cur, layer.w, 0.0, next);
            const bool act = li + 1 < layers.size() || activate_last;
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < next.cols(); ++c) {
                    const double pre = next(r, c) + layer.b(0, c);
                    next(r, c) = act ? activate(pre, cfg_.slope) : pre;
                }
            std::swap(cur, next);
        }
        out = std::move(cur);
    };
    const bool activate_final = fin == FinalLayer::Activated;
    DenseMatrix core;
    run_chain(tower.core, rows, true, core);
    run_chain(tower.mu_head, core, activate_final, mu_out);
    run_chain(tower.sigma_head, core, activate_final, sigma_out);
}

void OperatorModel::trunk_eval_batch(const DenseMatrix& xs, DenseMatrix& t_mu,
                                     DenseMatrix& t_sigma) const {
    if (xs.cols() != cfg_.trunk_input)
        throw std::invalid_argument("model: trunk input width mismatch");
    tower_eval_batch(trunk_, FinalLayer::Activated, xs, t_mu, t_sigma);
}

void OperatorModel::branch_eval_batch(const DenseMatrix& inputs, DenseMatrix& b_mu,
                                      DenseMatrix& b_sigma) const {
    if (inputs.cols() != cfg_.branch_input)
        throw std::invalid_argument("model: branch input width mismatch");
    tower_eval_batch(branch_, FinalLayer::Linear, inputs, b_mu, b_sigma);
}

NodeId OperatorModel::trace_chain(Tape& tape, NodeId h, const std::vector<Layer>& layers,
                                  std::vector<NodeId>& params, bool activate_last) const {
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const NodeId w = tape.input(layers[li].w, true);
        const NodeId b = tape.input(layers[li].b, true);
        params.push_back(w);
        params.push_back(b);
        h = tape.affine(h, w, b);
        if (li + 1 < layers.size() || activate_last) h = tape.leaky_relu(h, cfg_.slope);
    }
    return h;
}

OperatorModel::Traced OperatorModel::trace(Tape& tape, const DenseMatrix& branch_rows,
                                           const DenseMatrix& trunk_rows) const {
    if (branch_rows.cols() != cfg_.branch_input || trunk_rows.cols() != cfg_.trunk_input)
        throw std::invalid_argument("model: traced input width mismatch");
    if (branch_rows.rows() != trunk_rows.rows())
        throw std::invalid_argument("model: traced batch sizes differ");
    Traced out;
    const NodeId bin = tape.input(branch_rows, false);
    const NodeId bc = trace_chain(tape, bin, branch_.core, out.params, true);
    const NodeId bmu = trace_chain(tape, bc, branch_.mu_head, out.params, false);
    const NodeId bsig = trace_chain(tape, bc, branch_.sigma_head, out.params, false);
    const NodeId tin = tape.input(trunk_rows, false);
    const NodeId tc = trace_chain(tape, tin, trunk_.core, out.params, true);
    const NodeId tmu = trace_chain(tape, tc, trunk_.mu_head, out.params, true);
    const NodeId tsig = trace_chain(tape, tc, trunk_.sigma_head, out.params, true);
    out.mu = tape.row_inner(bmu, tmu);
    out.log_sigma =
        tape.clip_straight_through(tape.row_inner(bsig, tsig), cfg_.clip_lo, cfg_.clip_hi);
    return out;
}

OperatorModel::TracedTrunk OperatorModel::trace_trunk(Tape& tape, NodeId x_node) const {
    std::vector<NodeId> scratch;
    const auto chain = [&](const std::vector<Layer>& layers, NodeId h, bool activate_last) {
        for (std::size_t li = 0; li < layers.size(); ++li) {
            const NodeId w = tape.input(layers[li].w, false);
            const NodeId b = tape.input(layers[li].b, false);
            h = tape.affine(h, w, b);
            if (li + 1 < layers.size() || activate_last) h = tape.leaky_relu(h, cfg_.slope);
        }
        return h;
    };
    const NodeId core = chain(trunk_.core, x_node, true);
    TracedTrunk out;
    out.t_mu = chain(trunk_.mu_head, core, true);
    out.t_sigma = chain(trunk_.sigma_head, core, true);
    return out;
}

double OperatorModel::kink_distance(std::span<const double> branch_in,
                                    std::span<const double> x) const {
    Workspace ws = make_workspace();
    double min_preact = std::numeric_limits<double>::infinity();
    tower_eval(branch_, FinalLayer::Linear, branch_in, ws.b_mu, ws.b_sigma, ws, &min_preact);
    tower_eval(trunk_, FinalLayer::Activated, x, ws.t_mu, ws.t_sigma, ws, &min_preact);
    return min_preact;
}

void save_checkpoint(OperatorModel& model, const std::map<std::string, std::string>& meta,
                     const std::string& path) {
    const ModelConfig& cfg = model.config();
    BinWriter w(path);
    w.magic("OPUQCK01");
    w.u32(1);

    std::string arch;
    arch += "branch_input=" + std::to_string(cfg.branch_input) + "\n";
    arch += "trunk_input=" + std::to_string(cfg.trunk_input) + "\n";
    arch += "branch_core=" + join_sizes(cfg.branch.core) + "\n";
    arch += "branch_head=" + join_sizes(cfg.branch.head) + "\n";
    arch += "trunk_core=" + join_sizes(cfg.trunk.core) + "\n";
    arch += "trunk_head=" + join_sizes(cfg.trunk.head) + "\n";
    arch += "slope=" + CsvWriter::num(cfg.slope) + "\n";
    arch += "clip_lo=" + CsvWriter::num(cfg.clip_lo) + "\n";
    arch += "clip_hi=" + CsvWriter::num(cfg.clip_hi) + "\n";
    arch += "sigma_init_scale=" + CsvWriter::num(cfg.sigma_init_scale) + "\n";
    w.text(arch);

    std::string kv;
    for (const auto& [key, value] : meta) {
        if (key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
            value.find('\n') != std::string::npos)
            throw std::invalid_argument("checkpoint metadata must be single-line without '='");
        kv += key + "=" + value + "\n";
    }
    w.text(kv);

    const auto params = model.parameters();
    w.u64(params.size());
    for (const auto& p : params) {
        w.u64(p.value->rows());
        w.u64(p.value->cols());
        w.f64_array(p.value->flat());
    }
    w.close();
}

LoadedModel load_checkpoint(const std::string& path) {
    BinReader r(path);
    r.expect_magic("OPUQCK01");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 " in " + path);

    const auto parse_kv = [&path](const std::string& text) {
        std::map<std::string, std::string> kv;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("malformed metadata line in " + path + ": " + line);
            kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
        return kv;
    };
    const auto arch = parse_kv(r.text());
    const auto need = [&](const std::string& key) -> const std::string& {
        const auto it = arch.find(key);
        if (it == arch.end())
            throw std::runtime_error("missing architecture key '" + key + "' in " + path);
        return it->second;
    };

    ModelConfig cfg;
    cfg.branch_input = std::stoul(need("branch_input"));
    cfg.trunk_input = std::stoul(need("trunk_input"));
    cfg.branch.core = split_sizes(need("branch_core"));
    cfg.branch.head = split_sizes(need("branch_head"));
    cfg.trunk.core = split_sizes(need("trunk_core"));
    cfg.trunk.head = split_sizes(need("trunk_head"));
    cfg.slope = std::strtod(need("slope").c_str(), nullptr);
    cfg.clip_lo = std::strtod(need("clip_lo").c_str(), nullptr);
    cfg.clip_hi = std::strtod(need("clip_hi").c_str(), nullptr);
    cfg.sigma_init_scale = std::strtod(need("sigma_init_scale").c_str(), nullptr);

    LoadedModel loaded{OperatorModel(cfg, 0), parse_kv(r.text())};

    const std::uint64_t n_params = r.u64();
    auto params = loaded.model.parameters();
    if (n_params != params.size())
        throw std::runtime_error("checkpoint parameter count mismatch in " + path);
    for (auto& p : params) {
        const std::uint64_t rows = r.u64();
        const std::uint64_t cols = r.u64();
        if (rows != p.value->rows() || cols != p.value->cols())
            throw std::runtime_error("checkpoint shape mismatch for " + p.name + " in " + path);
        const std::vector<double> data = r.f64_array();
        if (data.size() != rows * cols)
            throw std::runtime_error("checkpoint payload size mismatch for " + p.name + " in " +
                                     path);
        std::copy(data.begin(), data.end(), p.value->flat().begin());
    }
    return loaded;
}

}  // namespace opuq
