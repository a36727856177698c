#include "chaosgen/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "chaosgen/dataio.hpp"

namespace chaosgen {

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr char kMagic[4] = {'C', 'G', 'E', 'N'};
constexpr char kMatrixMagic[8] = {'C', 'G', 'E', 'N', 'M', 'A', 'T', '\0'};

// Host is assumed little-endian (checked at startup in debug builds would be
// overkill; all supported targets are).

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

void put_matrix(std::vector<std::uint8_t>& out, const MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) put(out, m(i, j));
}

void put_vector(std::vector<std::uint8_t>& out, const VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put(out, v(i));
}

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size())
            throw FormatError("checkpoint: truncated", pos_);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    MatrixXd get_matrix(Eigen::Index rows, Eigen::Index cols) {
        MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = get<double>();
        return m;
    }

    VectorXd get_vector(Eigen::Index n) {
        VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = get<double>();
        return v;
    }

    std::size_t pos() const { return pos_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params, std::uint64_t epoch,
                                               std::uint64_t seed) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put<std::uint32_t>(out, 1);  // version
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, UnrestrictedParams>) {
                put<std::uint32_t>(out, 0);
                put<std::uint32_t>(out, static_cast<std::uint32_t>(p.n_v));
                put<std::uint32_t>(out, 0);
                put<std::uint32_t>(out, 0);
                put<std::uint32_t>(out, 0);
                put(out, p.g);
                put(out, epoch);
                put(out, seed);
                put_matrix(out, p.J);
                put_matrix(out, p.A);
                put_vector(out, p.b);
            } else if constexpr (std::is_same_v<P, RestrictedParams>) {
                put<std::uint32_t>(out, 1);
                put<std::uint32_t>(out, static_cast<std::uint32_t>(p.n_v));
                put<std::uint32_t>(out, static_cast<std::uint32_t>(p.n_h));
                put<std::uint32_t>(out, 0);
                put<std::uint32_t>(out, 0);
                put(out, p.g);
                put(out, epoch);
                put(out, seed);
                put_matrix(out, p.W);
                put_matrix(out, p.W_tilde);
                put_matrix(out, p.A);
                put_vector(out, p.b);
                put_vector(out, p.c);
            } else {
                put<std::uint32_t>(out, 2);
                put<std::uint32_t>(out, static_cast<std::uint32_t>(p.n_v));
                put<std::uint32_t>(out, static_cast<std::uint32_t>(p.n_h1));
                put<std::uint32_t>(out, static_cast<std::uint32_t>(p.n_h2));
                put<std::uint32_t>(out, 0);
                put(out, p.g);
                put(out, epoch);
                put(out, seed);
                put_matrix(out, p.W1);
                put_matrix(out, p.W1_tilde);
                put_matrix(out, p.W2);
                put_matrix(out, p.W2_tilde);
                put_matrix(out, p.A1);
                put_matrix(out, p.A2);
                put_vector(out, p.b);
                put_vector(out, p.c);
                put_vector(out, p.d);
            }
        },
        params);
    put(out, crc32(out.data(), out.size()));
    return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) throw FormatError("checkpoint: too short", bytes.size());
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic", 0);
    const std::size_t body = bytes.size() - 4;
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, bytes.data() + body, 4);
    if (crc32(bytes.data(), body) != stored_crc)
        throw FormatError("checkpoint: checksum mismatch", body);

    Reader r(bytes);
    r.get<std::uint32_t>();  // magic, already checked
    Checkpoint cp;
    cp.version = r.get<std::uint32_t>();
    if (cp.version != 1)
        throw FormatError("checkpoint: unsupported version " + std::to_string(cp.version), 4);
    const std::uint32_t arch = r.get<std::uint32_t>();
    const int n_v = static_cast<int>(r.get<std::uint32_t>());
    const int d1 = static_cast<int>(r.get<std::uint32_t>());
    const int d2 = static_cast<int>(r.get<std::uint32_t>());
    r.get<std::uint32_t>();  // reserved
    const double g = r.get<double>();
    cp.epoch = r.get<std::uint64_t>();
    cp.seed = r.get<std::uint64_t>();

    if (arch == 0) {
        UnrestrictedParams p;
        p.n_v = n_v;
        p.g = g;
        p.J = r.get_matrix(n_v, n_v);
        p.A = r.get_matrix(n_v, n_v);
        p.b = r.get_vector(n_v);
        cp.params = std::move(p);
    } else if (arch == 1) {
        RestrictedParams p;
        p.n_v = n_v;
        p.n_h = d1;
        p.g = g;
        p.W = r.get_matrix(n_v, d1);
        p.W_tilde = r.get_matrix(d1, n_v);
        p.A = r.get_matrix(n_v, d1);
        p.b = r.get_vector(n_v);
        p.c = r.get_vector(d1);
        cp.params = std::move(p);
    } else if (arch == 2) {
        DeepParams p;
        p.n_v = n_v;
        p.n_h1 = d1;
        p.n_h2 = d2;
        p.g = g;
        p.W1 = r.get_matrix(n_v, d1);
        p.W1_tilde = r.get_matrix(d1, n_v);
        p.W2 = r.get_matrix(d1, d2);
        p.W2_tilde = r.get_matrix(d2, d1);
        p.A1 = r.get_matrix(n_v, d1);
        p.A2 = r.get_matrix(d1, d2);
        p.b = r.get_vector(n_v);
        p.c = r.get_vector(d1);
        p.d = r.get_vector(d2);
        cp.params = std::move(p);
    } else {
        throw FormatError("checkpoint: unknown architecture tag " + std::to_string(arch), 8);
    }
    if (r.pos() != body)
        throw FormatError("checkpoint: trailing bytes before checksum", r.pos());
    return cp;
}

void save_checkpoint(const std::string& path, const ModelParams& params, std::uint64_t epoch,
                     std::uint64_t seed) {
    const auto bytes = serialize_checkpoint(params, epoch, seed);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

void write_matrix(const std::string& path, const MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_matrix: cannot open " + path);
    out.write(kMatrixMagic, 8);
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
    if (!out) throw std::runtime_error("write_matrix: write failed for " + path);
}

MatrixXd read_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_matrix: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMatrixMagic, 8) != 0)
        throw FormatError("matrix dump: bad magic", 0);
    std::uint32_t rows, cols;
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (!in) throw FormatError("matrix dump: truncated header", 8);
    MatrixXd m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), 8);
            if (!in) throw FormatError("matrix dump: truncated data", 16);
            m(i, j) = v;
        }
    return m;
}

}  // namespace chaosgen
