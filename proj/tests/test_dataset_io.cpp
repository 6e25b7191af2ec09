#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "rer/csv.hpp"
#include "rer/dataset.hpp"
#include "rer/errors.hpp"
#include "rer/npy.hpp"
#include "rer/rng.hpp"

using namespace rer;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

// Reference npy writer, independent of the library: hand-assembled v1.0
// bytes for a float32 C-order array.
void reference_npy_f32(const std::string& path, const float* data, std::size_t rows,
                       std::size_t cols) {
    std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                       std::to_string(rows) + ", " + std::to_string(cols) + "), }";
    const std::size_t unpadded = 10 + dict.size() + 1;
    const std::size_t padded = (unpadded + 63) / 64 * 64;
    dict.append(padded - unpadded, ' ');
    dict += '\n';

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write("\x93NUMPY", 6);
    out.put(1);
    out.put(0);
    const std::uint16_t len = static_cast<std::uint16_t>(dict.size());
    out.put(static_cast<char>(len & 0xff));
    out.put(static_cast<char>(len >> 8));
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(rows * cols * sizeof(float)));
}

} // namespace

TEST_CASE("csv 2x3 parses literally") {
    const auto path = temp_path("rer_t_small.csv");
    write_file(path, "0,0.5,1\n1,0.25,0\n");
    const Matrix m = load_features(path, FeatureFormat::Csv);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    CHECK(m(0, 0) == 0.0);
    CHECK(m(0, 1) == 0.5);
    CHECK(m(0, 2) == 1.0);
    CHECK(m(1, 0) == 1.0);
    CHECK(m(1, 1) == 0.25);
    CHECK(m(1, 2) == 0.0);
}

TEST_CASE("csv header row is auto-detected") {
    const auto path = temp_path("rer_t_header.csv");
    write_file(path, "f0,f1\n1,2\n3,4\n");
    const Matrix m = load_csv_matrix(path);
    REQUIRE(m.rows() == 2);
    CHECK(m(1, 1) == 4.0);
}

TEST_CASE("csv rejects NaN and ragged rows") {
    const auto path = temp_path("rer_t_nan.csv");
    write_file(path, "1,nan\n2,3\n");
    CHECK_THROWS_WITH_AS(load_csv_matrix(path), doctest::Contains("row 0, column 1"),
                         ValidationError);
    write_file(path, "1,2\n3\n");
    CHECK_THROWS_AS(load_csv_matrix(path), FormatError);
}

TEST_CASE("npy float32 written by a reference writer reads back exactly") {
    const float values[8] = {0.0f, 1.5f, -2.25f, 3.0f, 0.125f, -0.5f, 7.0f, 1e-3f};
    const auto path = temp_path("rer_t_ref.npy");
    reference_npy_f32(path, values, 4, 2);
    const Matrix m = load_npy(path);
    REQUIRE(m.rows() == 4);
    REQUIRE(m.cols() == 2);
    for (std::size_t i = 0; i < 8; ++i)
        CHECK(m.data()[i] == static_cast<double>(values[i])); // widening is exact
}

TEST_CASE("npy rejects 1-D arrays") {
    const auto path = temp_path("rer_t_1d.npy");
    std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }";
    const std::size_t unpadded = 10 + dict.size() + 1;
    dict.append((unpadded + 63) / 64 * 64 - unpadded, ' ');
    dict += '\n';
    std::ofstream out(path, std::ios::binary);
    out.write("\x93NUMPY", 6);
    out.put(1);
    out.put(0);
    out.put(static_cast<char>(dict.size() & 0xff));
    out.put(static_cast<char>(dict.size() >> 8));
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    const double d[3] = {1, 2, 3};
    out.write(reinterpret_cast<const char*>(d), sizeof(d));
    out.close();
    CHECK_THROWS_WITH_AS(load_npy(path), doctest::Contains("expected 2-D array"), FormatError);
}

TEST_CASE("npy rejects non-finite payloads, truncation, bad magic") {
    const auto path = temp_path("rer_t_bad.npy");
    Matrix m(2, 2);
    m(0, 0) = 1.0;
    save_npy(path, m);
    {
        // overwrite one value with inf via direct byte surgery
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(-32, std::ios::end);
        const double inf = std::numeric_limits<double>::infinity();
        f.write(reinterpret_cast<const char*>(&inf), 8);
    }
    CHECK_THROWS_AS(load_npy(path), ValidationError);

    save_npy(path, m);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    CHECK_THROWS_WITH_AS(load_npy(path), doctest::Contains("truncated"), FormatError);

    write_file(path, "not an npy file at all");
    CHECK_THROWS_AS(load_npy(path), FormatError);
}

TEST_CASE("npy round-trip is exact over random matrices") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t rows = 1 + rng.below(12);
        const std::size_t cols = 2 + rng.below(9);
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 100.0;
        const auto path = temp_path("rer_t_round.npy");
        save_npy(path, m);
        const Matrix back = load_npy(path);
        REQUIRE(back.rows() == rows);
        REQUIRE(back.cols() == cols);
        for (std::size_t i = 0; i < m.size(); ++i) CHECK(back.data()[i] == m.data()[i]);
    }
}

TEST_CASE("csv round-trip is exact over random matrices") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t rows = 1 + rng.below(10);
        const std::size_t cols = 2 + rng.below(6);
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 10.0;
        const auto path = temp_path("rer_t_round.csv");
        save_csv_matrix(path, m);
        const Matrix back = load_csv_matrix(path);
        REQUIRE(back.rows() == rows);
        REQUIRE(back.cols() == cols);
        for (std::size_t i = 0; i < m.size(); ++i)
            CHECK(back.data()[i] == m.data()[i]); // 17 significant digits round-trip f64
    }
}

TEST_CASE("min-max normalization maps columns to [0,1]") {
    Matrix m(3, 3);
    // column 0: 0,5,10 ; column 1: constant 3 ; column 2: already 0..1
    const double vals[9] = {0, 3, 0.0, 5, 3, 0.25, 10, 3, 1.0};
    std::memcpy(m.data(), vals, sizeof(vals));
    const auto [out, params] = min_max_normalize(m);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(1, 0) == 0.5);
    CHECK(out(2, 0) == 1.0);
    CHECK(out(0, 1) == 0.5);
    CHECK(out(1, 1) == 0.5);
    CHECK(out(2, 1) == 0.5);
    CHECK(out(0, 2) == 0.0);
    CHECK(out(1, 2) == 0.25);
    CHECK(out(2, 2) == 1.0);
    CHECK(params.min[2] == 0.0);
    CHECK(params.max[2] == 1.0);
}

TEST_CASE("normalization is idempotent on already-normalized data") {
    Rng rng(7);
    Matrix m(40, 6);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 3.0 + 1.0;
    const auto [once, p1] = min_max_normalize(m);
    const auto [twice, p2] = min_max_normalize(once);
    for (std::size_t i = 0; i < once.size(); ++i)
        CHECK(std::abs(once.data()[i] - twice.data()[i]) <= 1e-12);
}

TEST_CASE("labels load from csv and sparse values densify with a remap table") {
    const auto path = temp_path("rer_t_labels.csv");
    write_file(path, "10\n30\n10\n20\n");
    const LabelFile labels = load_labels(path);
    CHECK(labels.n_classes == 3);
    CHECK(labels.dense == std::vector<int>{0, 2, 0, 1});
    CHECK(labels.values == std::vector<long long>{10, 20, 30});
}

TEST_CASE("labels load from json with class names") {
    const auto path = temp_path("rer_t_labels.json");
    write_file(path, R"({"labels": [0, 1, 1, 0], "class_names": ["cat", "dog"]})");
    const LabelFile labels = load_labels(path);
    CHECK(labels.n_classes == 2);
    CHECK(labels.dense == std::vector<int>{0, 1, 1, 0});
    CHECK(labels.class_names == std::vector<std::string>{"cat", "dog"});

    write_file(path, "[2, 2, 5]");
    const LabelFile plain = load_labels(path);
    CHECK(plain.n_classes == 2);
    CHECK(plain.dense == std::vector<int>{0, 0, 1});
}

TEST_CASE("dataset validation rejects bad label ranges and size mismatches") {
    FeatureDataset ds;
    ds.features = Matrix(3, 2);
    ds.noisy_labels = {0, 1, 2};
    ds.n_classes = 2;
    CHECK_THROWS_AS(ds.validate(), ValidationError);
    ds.n_classes = 3;
    CHECK_NOTHROW(ds.validate());
    ds.clean_labels = std::vector<int>{0, 1};
    CHECK_THROWS_AS(ds.validate(), ValidationError);
}
