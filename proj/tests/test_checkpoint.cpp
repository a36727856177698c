#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "chaosgen/checkpoint.hpp"
#include "chaosgen/dataio.hpp"
#include "chaosgen/rng.hpp"

using namespace chaosgen;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    fs::path dir = fs::temp_directory_path() / "chaosgen_ckpt_test";
    fs::create_directories(dir);
    return dir;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

bool bit_equal(const MatrixXd& a, const MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("crc32 matches the standard check value") {
    const char* s = "123456789";
    CHECK(crc32(reinterpret_cast<const std::uint8_t*>(s), 9) == 0xCBF43926u);
}

TEST_CASE("checkpoint byte round trips") {
    SUBCASE("unrestricted") {
        ModelParams p = init_unrestricted(5, 1.5, 3);
        std::get<UnrestrictedParams>(p).A.setRandom();
        auto bytes = serialize_checkpoint(p, 42, 7);
        Checkpoint back = deserialize_checkpoint(bytes);
        CHECK(back.epoch == 42);
        CHECK(back.seed == 7);
        const auto& orig = std::get<UnrestrictedParams>(p);
        const auto& got = std::get<UnrestrictedParams>(back.params);
        CHECK(got.n_v == orig.n_v);
        CHECK(got.g == orig.g);
        CHECK(bit_equal(got.J, orig.J));
        CHECK(bit_equal(got.A, orig.A));
        CHECK(got.b == orig.b);
        CHECK(serialize_checkpoint(back.params, back.epoch, back.seed) == bytes);
    }
    SUBCASE("restricted") {
        ModelParams p = init_restricted(4, 6, 2.0, 9);
        auto bytes = serialize_checkpoint(p, 1, 2);
        Checkpoint back = deserialize_checkpoint(bytes);
        const auto& orig = std::get<RestrictedParams>(p);
        const auto& got = std::get<RestrictedParams>(back.params);
        CHECK(bit_equal(got.W, orig.W));
        CHECK(bit_equal(got.W_tilde, orig.W_tilde));
        CHECK(bit_equal(got.A, orig.A));
        CHECK(got.b == orig.b);
        CHECK(got.c == orig.c);
        CHECK(serialize_checkpoint(back.params, 1, 2) == bytes);
    }
    SUBCASE("deep") {
        ModelParams p = init_deep(3, 4, 2, 1.0, 5);
        auto bytes = serialize_checkpoint(p, 100, 200);
        Checkpoint back = deserialize_checkpoint(bytes);
        const auto& orig = std::get<DeepParams>(p);
        const auto& got = std::get<DeepParams>(back.params);
        CHECK(bit_equal(got.W1, orig.W1));
        CHECK(bit_equal(got.W2_tilde, orig.W2_tilde));
        CHECK(bit_equal(got.A2, orig.A2));
        CHECK(got.d == orig.d);
        CHECK(serialize_checkpoint(back.params, 100, 200) == bytes);
    }
}

TEST_CASE("checkpoint files") {
    const fs::path dir = temp_dir();
    ModelParams p = init_restricted(4, 3, 1.5, 1);
    const fs::path a = dir / "a.ckpt", b = dir / "b.ckpt";
    save_checkpoint(a.string(), p, 10, 99);

    SUBCASE("save - load - save is byte-identical") {
        Checkpoint back = load_checkpoint(a.string());
        save_checkpoint(b.string(), back.params, back.epoch, back.seed);
        CHECK(slurp(a) == slurp(b));
    }
    SUBCASE("a flipped payload byte is refused") {
        auto bytes = slurp(a);
        bytes[bytes.size() / 2] ^= 0x40;
        std::ofstream out(b, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(load_checkpoint(b.string()), FormatError);
    }
    SUBCASE("truncation is refused") {
        auto bytes = slurp(a);
        bytes.resize(bytes.size() - 5);
        std::ofstream out(b, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(load_checkpoint(b.string()), FormatError);
    }
    SUBCASE("bad magic is refused") {
        auto bytes = slurp(a);
        bytes[0] = 'X';
        std::ofstream out(b, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(load_checkpoint(b.string()), FormatError);
    }
    SUBCASE("missing file is refused") {
        CHECK_THROWS_AS(load_checkpoint((dir / "nope.ckpt").string()), std::runtime_error);
    }
}

TEST_CASE("raw matrix dumps") {
    const fs::path dir = temp_dir();
    const fs::path p = dir / "m.mat";
    SUBCASE("round trip is bitwise exact") {
        Rng rng(8);
        MatrixXd m(5, 3);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 3; ++j) m(i, j) = rng.normal();
        write_matrix(p.string(), m);
        MatrixXd back = read_matrix(p.string());
        CHECK(bit_equal(m, back));
    }
    SUBCASE("header layout is 16 bytes then row-major doubles") {
        MatrixXd m(2, 2);
        m << 1.0, 2.0, 3.0, 4.0;
        write_matrix(p.string(), m);
        auto bytes = slurp(p);
        REQUIRE(bytes.size() == 16 + 4 * sizeof(double));
        CHECK(std::memcmp(bytes.data(), "CGENMAT\0", 8) == 0);
        double first;
        std::memcpy(&first, bytes.data() + 16, sizeof(double));
        CHECK(first == 1.0);
        double second;
        std::memcpy(&second, bytes.data() + 16 + sizeof(double), sizeof(double));
        CHECK(second == 2.0);  // row-major: (0,1) follows (0,0)
    }
    SUBCASE("corrupted magic is refused") {
        MatrixXd m = MatrixXd::Zero(2, 2);
        write_matrix(p.string(), m);
        auto bytes = slurp(p);
        bytes[1] ^= 0xFF;
        std::ofstream out(p, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(read_matrix(p.string()), FormatError);
    }
}
