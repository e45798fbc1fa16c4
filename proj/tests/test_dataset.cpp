#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "opuq/dataset.hpp"

using namespace opuq;

namespace {

DatasetConfig small_config() {
    DatasetConfig cfg;
    cfg.resolution = 16;
    cfg.family = PdeFamily::PoissonInhomogeneous;
    cfg.length_scales = {0.2, 0.3};
    cfg.n_per_scale = 10;
    cfg.eval_per_record = 20;
    cfg.n_interior_sensors = 30;
    cfg.n_boundary_sensors = 16;
    cfg.seed = 71;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("layouts are distinct, in range, and seed-stable") {
    const Domain d = Domain::make(Domain::Shape::UnitSquare, 16);
    const SensorLayout a = make_layout(d, 30, 16, 5);
    const SensorLayout b = make_layout(d, 30, 16, 5);
    const SensorLayout c = make_layout(d, 30, 16, 6);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.interior.size() == 30);
    CHECK(a.boundary.size() == 16);

    std::set<std::uint64_t> uniq(a.interior.begin(), a.interior.end());
    CHECK(uniq.size() == 30);
    const std::set<std::size_t> interior(d.interior.begin(), d.interior.end());
    for (std::uint64_t idx : a.interior) CHECK(interior.count(idx) == 1);
    for (std::uint64_t pos : a.boundary) CHECK(pos < d.boundary.size());

    CHECK_THROWS(make_layout(d, d.interior.size() + 1, 4, 1));
}

TEST_CASE("generation honors the count contracts") {
    DatasetConfig cfg = small_config();
    const Dataset ds = generate_dataset(cfg);
    CHECK(ds.records.size() == 20);
    for (const DataRecord& rec : ds.records) {
        CHECK(rec.f_sensors.size() == 30);
        CHECK(rec.g_sensors.size() == 16);
        CHECK(rec.targets.size() == 20);
        CHECK(rec.eval_xy.size() == 40);
        for (double t : rec.targets) CHECK(std::isfinite(t));
        CHECK((rec.length_scale == 0.2 || rec.length_scale == 0.3));
    }
    CHECK(ds.sensor_dim() == 46);

    DatasetConfig one = small_config();
    one.length_scales = {0.25};
    one.n_per_scale = 1;
    one.eval_per_record = 50;
    const Dataset single = generate_dataset(one);
    REQUIRE(single.records.size() == 1);
    CHECK(single.records[0].targets.size() == 50);
}

TEST_CASE("homogeneous records carry exactly zero boundary data") {
    DatasetConfig cfg = small_config();
    cfg.family = PdeFamily::PoissonHomogeneous;
    cfg.n_per_scale = 4;
    const Dataset ds = generate_dataset(cfg);
    for (const DataRecord& rec : ds.records)
        for (double g : rec.g_sensors) CHECK(g == 0.0);
}

TEST_CASE("stored forcing values have unit spread after rescaling") {
    const Dataset ds = generate_dataset(small_config());
    CHECK(ds.f_scale > 0.0);
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (const DataRecord& rec : ds.records)
        for (double v : rec.f_sensors) {
            sum += v;
            sum_sq += v * v;
            ++n;
        }
    const double mean = sum / n;
    const double sd = std::sqrt(sum_sq / n - mean * mean);
    CHECK(sd == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("same seed reproduces the dataset byte for byte") {
    const DatasetConfig cfg = small_config();
    const Dataset a = generate_dataset(cfg);
    const Dataset b = generate_dataset(cfg);
    CHECK(a == b);

    TempFile fa("ds_rep_a.bin"), fb("ds_rep_b.bin");
    write_dataset(a, fa.path);
    write_dataset(b, fb.path);
    CHECK(slurp(fa.path) == slurp(fb.path));
}

TEST_CASE("changing the layout seed changes sensors but not targets") {
    DatasetConfig cfg = small_config();
    cfg.layout_seed = 1001;
    const Dataset a = generate_dataset(cfg);
    cfg.layout_seed = 1002;
    const Dataset b = generate_dataset(cfg);

    REQUIRE(a.records.size() == b.records.size());
    CHECK(a.layout != b.layout);
    bool any_sensor_diff = false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].eval_xy == b.records[i].eval_xy);
        CHECK(a.records[i].targets == b.records[i].targets);
        CHECK(a.records[i].seed == b.records[i].seed);
        if (a.records[i].f_sensors != b.records[i].f_sensors) any_sensor_diff = true;
    }
    CHECK(any_sensor_diff);
}

TEST_CASE("datasets round-trip losslessly") {
    const Dataset ds = generate_dataset(small_config());
    TempFile f("ds_round.bin");
    write_dataset(ds, f.path);
    const Dataset back = read_dataset(f.path);
    CHECK(back == ds);
}

TEST_CASE("an empty dataset is a valid file") {
    DatasetConfig cfg = small_config();
    cfg.n_per_scale = 0;
    const Dataset ds = generate_dataset(cfg);
    CHECK(ds.records.empty());
    CHECK(ds.f_scale == 1.0);
    TempFile f("ds_empty.bin");
    write_dataset(ds, f.path);
    const Dataset back = read_dataset(f.path);
    CHECK(back == ds);
}

TEST_CASE("corrupt files fail loudly") {
    const Dataset ds = generate_dataset(small_config());
    TempFile f("ds_corrupt.bin");
    write_dataset(ds, f.path);

    SUBCASE("truncation names the stream and offset") {
        const std::string bytes = slurp(f.path);
        std::ofstream out(f.path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_WITH_AS(read_dataset(f.path),
                             doctest::Contains("unexpected end of stream"), std::runtime_error);
    }

    SUBCASE("a foreign magic is rejected") {
        std::string bytes = slurp(f.path);
        bytes[0] = 'X';
        std::ofstream out(f.path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_WITH_AS(read_dataset(f.path), doctest::Contains("bad magic"),
                             std::runtime_error);
    }
}

TEST_CASE("validation takes the trailing tenth of every scale class") {
    const Dataset ds = generate_dataset(small_config());  // 2 scales x 10 records
    const auto val = validation_indices(ds);
    const auto train = training_indices(ds);
    CHECK(val.size() == 2);
    CHECK(train.size() == 18);

    // the validation picks are the last stored record of each scale
    std::size_t last02 = 0, last03 = 0;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        if (ds.records[i].length_scale == 0.2) last02 = i;
        if (ds.records[i].length_scale == 0.3) last03 = i;
    }
    const std::set<std::size_t> vs(val.begin(), val.end());
    CHECK(vs.count(last02) == 1);
    CHECK(vs.count(last03) == 1);

    std::set<std::size_t> all(val.begin(), val.end());
    all.insert(train.begin(), train.end());
    CHECK(all.size() == ds.records.size());

    CHECK(unique_scales(ds) == std::vector<double>{0.2, 0.3});
}

TEST_CASE("records are shuffled across scale blocks") {
    const Dataset ds = generate_dataset(small_config());
    // with 10 + 10 records an unshuffled file would put all 0.2 first
    bool interleaved = false;
    for (std::size_t i = 1; i < ds.records.size() / 2; ++i)
        if (ds.records[i].length_scale != ds.records[0].length_scale) interleaved = true;
    CHECK(interleaved);
}

}  // TEST_SUITE
