#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chaosgen/dynamics.hpp"

namespace chaosgen {

// Versioned binary container: magic "CGEN", version, architecture tag,
// dimensions, g, epoch, master seed, tensors as little-endian row-major
// doubles in declared order, trailing CRC-32 over all preceding bytes.
struct Checkpoint {
    std::uint32_t version = 1;
    ModelParams params;
    std::uint64_t epoch = 0;
    std::uint64_t seed = 0;
};

std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params, std::uint64_t epoch,
                                               std::uint64_t seed);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const ModelParams& params, std::uint64_t epoch,
                     std::uint64_t seed);
Checkpoint load_checkpoint(const std::string& path);

// Raw matrix dump: 16-byte header (8-byte magic "CGENMAT\0", u32 rows,
// u32 cols), then row-major little-endian doubles.
void write_matrix(const std::string& path, const MatrixXd& m);
MatrixXd read_matrix(const std::string& path);

}  // namespace chaosgen
