#include "opuq/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>

#include "opuq/binio.hpp"
#include "opuq/csvio.hpp"
#include "opuq/field.hpp"
#include "opuq/rng.hpp"

namespace opuq {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint64_t kShuffleTag = 0xffffffff00000001ull;

double cutoff(Domain::Shape shape, double x, double y) {
    if (shape == Domain::Shape::UnitSquare) return bubble(x, y);
    const double dx = x - 0.5;
    const double dy = y - 0.5;
    return std::max(0.0, 1.0 - 4.0 * (dx * dx + dy * dy));
}

std::string join_u64(const std::vector<std::uint64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<std::uint64_t> split_u64(const std::string& s) {
    std::vector<std::uint64_t> v;
    std::istringstream in(s);
    std::uint64_t x;
    while (in >> x) v.push_back(x);
    return v;
}

}  // namespace

SensorLayout make_layout(const Domain& domain, std::size_t n_interior, std::size_t n_boundary,
                         std::uint64_t layout_seed) {
    if (n_interior > domain.interior.size())
        throw std::runtime_error("make_layout: requested more interior sensors than interior points");
    if (n_boundary > domain.boundary.size())
        throw std::runtime_error("make_layout: requested more boundary sensors than boundary points");
    Rng rng(layout_seed);
    SensorLayout layout;
    for (std::size_t pos : rng.sample_without_replacement(domain.interior.size(), n_interior))
        layout.interior.push_back(domain.interior[pos]);
    for (std::size_t pos : rng.sample_without_replacement(domain.boundary.size(), n_boundary))
        layout.boundary.push_back(pos);
    std::sort(layout.interior.begin(), layout.interior.end());
    std::sort(layout.boundary.begin(), layout.boundary.end());
    return layout;
}

Dataset generate_dataset(const DatasetConfig& cfg) {
    const Domain domain = Domain::make(cfg.shape, cfg.resolution);
    const std::uint64_t layout_seed =
        cfg.layout_seed != 0 ? cfg.layout_seed : cfg.seed + 0x517cc1b727220a95ull;

    Dataset ds;
    ds.shape = cfg.shape;
    ds.resolution = cfg.resolution;
    ds.family = cfg.family;
    ds.generator_version = kFormatVersion;
    ds.layout = make_layout(domain, cfg.n_interior_sensors, cfg.n_boundary_sensors, layout_seed);

    std::vector<std::size_t> pos_in_interior(domain.resolution * domain.resolution, SIZE_MAX);
    for (std::size_t k = 0; k < domain.interior.size(); ++k)
        pos_in_interior[domain.interior[k]] = k;

    std::vector<std::size_t> eval_pool = domain.interior;
    eval_pool.insert(eval_pool.end(), domain.boundary.begin(), domain.boundary.end());
    if (cfg.eval_per_record > eval_pool.size())
        throw std::runtime_error("generate_dataset: eval_per_record exceeds domain point count");

    std::vector<std::vector<double>> points;
    points.reserve(domain.masked.size());
    for (std::size_t idx : domain.masked)
        points.push_back({domain.x_of(idx), domain.y_of(idx)});

    const Rng root(cfg.seed);
    for (std::size_t si = 0; si < cfg.length_scales.size(); ++si) {
        const double scale = cfg.length_scales[si];
        const FieldSampler sampler(points, SqExpKernel{scale}, cfg.seed);
        for (std::size_t j = 0; j < cfg.n_per_scale; ++j) {
            const std::uint64_t tag = (static_cast<std::uint64_t>(si) << 32) | j;
            Rng rec_rng = root.split(tag);

            const std::vector<double> z = sampler.sample_with(rec_rng);
            GridFunction u(domain.resolution);
            for (std::size_t i = 0; i < domain.masked.size(); ++i)
                u.values[domain.masked[i]] = z[i];
            if (cfg.family == PdeFamily::PoissonHomogeneous) {
                for (std::size_t idx : domain.masked)
                    u.values[idx] *= cutoff(cfg.shape, domain.x_of(idx), domain.y_of(idx));
                for (std::size_t idx : domain.boundary) u.values[idx] = 0.0;
            }

            const OperatorResult op = apply_operator(cfg.family, u, domain);

            DataRecord rec;
            rec.length_scale = scale;
            rec.seed = tag;
            rec.f_sensors.reserve(ds.layout.interior.size());
            for (std::uint64_t gidx : ds.layout.interior)
                rec.f_sensors.push_back(op.f[pos_in_interior[gidx]]);
            rec.g_sensors.reserve(ds.layout.boundary.size());
            for (std::uint64_t bpos : ds.layout.boundary) rec.g_sensors.push_back(op.g[bpos]);

            const std::vector<std::size_t> picks =
                rec_rng.sample_without_replacement(eval_pool.size(), cfg.eval_per_record);
            rec.eval_xy.reserve(2 * picks.size());
            rec.targets.reserve(picks.size());
            for (std::size_t p : picks) {
                const std::size_t gidx = eval_pool[p];
                rec.eval_xy.push_back(domain.x_of(gidx));
                rec.eval_xy.push_back(domain.y_of(gidx));
                rec.targets.push_back(u.values[gidx]);
            }
            ds.records.push_back(std::move(rec));
        }
    }

    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (const DataRecord& rec : ds.records)
        for (double v : rec.f_sensors) {
            sum += v;
            sum_sq += v * v;
            ++count;
        }
    if (count > 0) {
        const double mean = sum / static_cast<double>(count);
        const double var = sum_sq / static_cast<double>(count) - mean * mean;
        const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
        if (sd > 0.0) {
            ds.f_scale = sd;
            for (DataRecord& rec : ds.records)
                for (double& v : rec.f_sensors) v /= sd;
        }
    }

    Rng shuffle_rng = root.split(kShuffleTag);
    shuffle_rng.shuffle(ds.records);
    return ds;
}

void write_dataset(const Dataset& d, const std::string& path) {
    BinWriter w(path);
    w.magic("OPUQDS01");
    w.u32(kFormatVersion);

    std::string meta;
    meta += "shape=" + shape_name(d.shape) + "\n";
    meta += "resolution=" + std::to_string(d.resolution) + "\n";
    meta += "family=" + family_name(d.family) + "\n";
    meta += "generator=" + std::to_string(d.generator_version) + "\n";
    meta += "f_scale=" + CsvWriter::num(d.f_scale) + "\n";
    meta += "interior_sensors=" + join_u64(d.layout.interior) + "\n";
    meta += "boundary_sensors=" + join_u64(d.layout.boundary) + "\n";
    w.text(meta);

    w.u64(d.records.size());
    for (const DataRecord& rec : d.records) {
        w.f64_array(rec.f_sensors);
        w.f64_array(rec.g_sensors);
        w.f64_array(rec.eval_xy);
        w.f64_array(rec.targets);
        w.f64(rec.length_scale);
        w.u64(rec.seed);
    }
    w.close();
}

namespace {

std::map<std::string, std::string> parse_meta(const std::string& text, const std::string& path) {
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
}

const std::string& meta_get(const std::map<std::string, std::string>& kv, const std::string& key,
                            const std::string& path) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("missing metadata key '" + key + "' in " + path);
    return it->second;
}

}  // namespace

Dataset read_dataset(const std::string& path) {
    BinReader r(path);
    r.expect_magic("OPUQDS01");
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported dataset version " + std::to_string(version) + " in " +
                                 path);

    const auto kv = parse_meta(r.text(), path);
    Dataset d;
    d.shape = parse_shape(meta_get(kv, "shape", path));
    d.resolution = static_cast<std::uint32_t>(std::stoul(meta_get(kv, "resolution", path)));
    d.family = parse_family(meta_get(kv, "family", path));
    d.generator_version = static_cast<std::uint32_t>(std::stoul(meta_get(kv, "generator", path)));
    d.f_scale = std::strtod(meta_get(kv, "f_scale", path).c_str(), nullptr);
    d.layout.interior = split_u64(meta_get(kv, "interior_sensors", path));
    d.layout.boundary = split_u64(meta_get(kv, "boundary_sensors", path));

    const std::uint64_t n = r.u64();
    d.records.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        DataRecord rec;
        rec.f_sensors = r.f64_array();
        rec.g_sensors = r.f64_array();
        rec.eval_xy = r.f64_array();
        rec.targets = r.f64_array();
        rec.length_scale = r.f64();
        rec.seed = r.u64();
        d.records.push_back(std::move(rec));
    }
    return d;
}

std::vector<std::size_t> validation_indices(const Dataset& d) {
    std::map<double, std::vector<std::size_t>> by_scale;
    for (std::size_t i = 0; i < d.records.size(); ++i)
        by_scale[d.records[i].length_scale].push_back(i);
    std::vector<std::size_t> val;
    for (const auto& [scale, positions] : by_scale) {
        const std::size_t n_val = positions.size() / 10;
        val.insert(val.end(), positions.end() - static_cast<std::ptrdiff_t>(n_val), positions.end());
    }
    std::sort(val.begin(), val.end());
    return val;
}

std::vector<std::size_t> training_indices(const Dataset& d) {
    const std::vector<std::size_t> val = validation_indices(d);
    std::vector<std::size_t> train;
    train.reserve(d.records.size() - val.size());
    std::size_t vi = 0;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        if (vi < val.size() && val[vi] == i) {
            ++vi;
        } else {
            train.push_back(i);
        }
    }
    return train;
}

std::vector<double> unique_scales(const Dataset& d) {
    std::vector<double> scales;
    for (const DataRecord& rec : d.records) scales.push_back(rec.length_scale);
    std::sort(scales.begin(), scales.end());
    scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
    return scales;
}

}  // namespace opuq
