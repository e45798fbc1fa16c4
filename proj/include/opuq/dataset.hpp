#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opuq/domain.hpp"
#include "opuq/family.hpp"

namespace opuq {

/// Fixed sensor placement shared by every record of a dataset.
/// interior entries index the full grid (scan order); boundary entries index
/// positions in Domain::boundary.
struct SensorLayout {
    std::vector<std::uint64_t> interior;
    std::vector<std::uint64_t> boundary;

    bool operator==(const SensorLayout&) const = default;
};

SensorLayout make_layout(const Domain& domain, std::size_t n_interior, std::size_t n_boundary,
                         std::uint64_t layout_seed);

struct DataRecord {
    std::vector<double> f_sensors;  // forcing at interior sensors, divided by f_scale
    std::vector<double> g_sensors;  // boundary trace at boundary sensors
    std::vector<double> eval_xy;    // 2k coords, (x, y) per eval point
    std::vector<double> targets;    // u at each eval point
    double length_scale = 0.0;
    std::uint64_t seed = 0;  // substream tag that regenerates this record

    bool operator==(const DataRecord&) const = default;
};

struct Dataset {
    Domain::Shape shape = Domain::Shape::UnitSquare;
    std::uint32_t resolution = 0;
    PdeFamily family = PdeFamily::PoissonInhomogeneous;
    std::uint32_t generator_version = 1;
    double f_scale = 1.0;  // dataset-wide std divisor applied to f_sensors
    SensorLayout layout;
    std::vector<DataRecord> records;

    bool operator==(const Dataset&) const = default;

    Domain domain() const { return Domain::make(shape, resolution); }
    std::size_t sensor_dim() const { return layout.interior.size() + layout.boundary.size(); }
};

struct DatasetConfig {
    Domain::Shape shape = Domain::Shape::UnitSquare;
    std::uint32_t resolution = 32;
    PdeFamily family = PdeFamily::PoissonInhomogeneous;
    std::vector<double> length_scales;
    std::size_t n_per_scale = 0;
    std::size_t eval_per_record = 50;
    std::size_t n_interior_sensors = 100;
    std::size_t n_boundary_sensors = 64;
    std::uint64_t seed = 0;
    std::uint64_t layout_seed = 0;  // 0 means derive from seed
};

/// Samples a field per record, applies the family operator, reads sensors and
/// eval targets, rescales f by the dataset-wide std, and shuffles the records.
Dataset generate_dataset(const DatasetConfig& cfg);

void write_dataset(const Dataset& d, const std::string& path);
Dataset read_dataset(const std::string& path);

/// Record positions whose length-scale class puts them in the trailing 10%
/// of that class (floor), in stored order.
std::vector<std::size_t> validation_indices(const Dataset& d);
std::vector<std::size_t> training_indices(const Dataset& d);

/// Distinct length scales, ascending.
std::vector<double> unique_scales(const Dataset& d);

}  // namespace opuq
