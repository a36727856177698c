#include "chaosgen/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "chaosgen/rng.hpp"

namespace chaosgen {

double forward_transform(double pixel) {
    if (pixel < 0.0 || pixel > 255.0)
        throw std::invalid_argument("forward_transform: pixel outside [0,255]");
    return 2.0 * pixel / 255.0 - 1.0;
}

double inverse_transform_pixel(double value) {
    double p = 255.0 * (value + 1.0) / 2.0;
    p = std::clamp(p, 0.0, 255.0);
    return std::round(p);
}

namespace {

std::uint32_t read_u32_be(std::ifstream& in, std::size_t& offset, const char* what) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw FormatError(std::string("IDX: truncated while reading ") + what, offset);
    offset += 4;
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream in(images_path, std::ios::binary);
    if (!in) throw FormatError("IDX: cannot open " + images_path, 0);
    std::size_t offset = 0;
    const std::uint32_t magic = read_u32_be(in, offset, "magic");
    if (magic != 0x00000803u)
        throw FormatError("IDX: bad image magic " + std::to_string(magic), 0);
    const std::uint32_t n_items = read_u32_be(in, offset, "item count");
    const std::uint32_t rows = read_u32_be(in, offset, "row count");
    const std::uint32_t cols = read_u32_be(in, offset, "column count");
    if (rows == 0 || cols == 0 || rows > 1u << 16 || cols > 1u << 16)
        throw FormatError("IDX: implausible image dimensions", 8);
    const std::uint64_t n_v64 = std::uint64_t(rows) * cols;
    if (std::uint64_t(n_items) * n_v64 > (1ull << 34))
        throw FormatError("IDX: declared size overflows sane limits", 4);
    const int n_v = static_cast<int>(n_v64);

    Dataset ds;
    ds.samples.resize(n_items, n_v);
    ds.image_shape = {static_cast<int>(rows), static_cast<int>(cols)};
    ds.source = images_path;
    std::vector<std::uint8_t> buf(n_v);
    for (std::uint32_t s = 0; s < n_items; ++s) {
        in.read(reinterpret_cast<char*>(buf.data()), n_v);
        if (!in) throw FormatError("IDX: truncated pixel data", offset);
        offset += static_cast<std::size_t>(n_v);
        for (int i = 0; i < n_v; ++i) ds.samples(s, i) = forward_transform(buf[i]);
    }

    if (!labels_path.empty()) {
        std::ifstream lin(labels_path, std::ios::binary);
        if (!lin) throw FormatError("IDX: cannot open " + labels_path, 0);
        std::size_t loff = 0;
        const std::uint32_t lmagic = read_u32_be(lin, loff, "label magic");
        if (lmagic != 0x00000801u)
            throw FormatError("IDX: bad label magic " + std::to_string(lmagic), 0);
        const std::uint32_t n_labels = read_u32_be(lin, loff, "label count");
        if (n_labels != n_items)
            throw FormatError("IDX: label count does not match image count", 4);
        ds.labels.resize(n_labels);
        lin.read(reinterpret_cast<char*>(ds.labels.data()), n_labels);
        if (!lin) throw FormatError("IDX: truncated label data", loff);
    }
    return ds;
}

MatrixXd minibatch(const Dataset& dataset, int m, std::uint64_t seed, std::uint64_t epoch_index) {
    const Eigen::Index n_s = dataset.samples.rows();
    if (m < 1 || m > n_s) throw std::invalid_argument("minibatch: m out of range");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_s));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, {stream::minibatch, epoch_index}));
    // partial Fisher-Yates: only the first m positions are needed
    for (int i = 0; i < m; ++i) {
        const auto j = i + static_cast<Eigen::Index>(rng.next_below(std::uint64_t(n_s - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    MatrixXd batch(m, dataset.samples.cols());
    for (int i = 0; i < m; ++i) batch.row(i) = dataset.samples.row(idx[static_cast<std::size_t>(i)]);
    return batch;
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
    if (name == "two-clusters") return SyntheticKind::TwoClusters;
    if (name == "bars-and-stripes") return SyntheticKind::BarsAndStripes;
    if (name == "downscaled-digits") return SyntheticKind::DownscaledDigits;
    throw std::invalid_argument("unknown synthetic dataset kind: " + name);
}

namespace {

int square_side(int n_v, const char* kind) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_v))));
    if (side * side != n_v)
        throw std::invalid_argument(std::string(kind) + ": n_v must be a perfect square");
    return side;
}

// Seven-segment glyph rasterizer used as the source for downscaled digits.
// Segments: 0 top, 1 top-right, 2 bottom-right, 3 bottom, 4 bottom-left,
// 5 top-left, 6 middle.
constexpr std::uint8_t kSegmentsByDigit[10] = {
    0b0111111,  // 0
    0b0000110,  // 1
    0b1011011,  // 2
    0b1001111,  // 3
    0b1100110,  // 4
    0b1101101,  // 5
    0b1111101,  // 6
    0b0000111,  // 7
    0b1111111,  // 8
    0b1101111,  // 9
};

MatrixXd render_digit28(int digit, Rng& rng) {
    MatrixXd img = MatrixXd::Zero(28, 28);
    // glyph box with a little random jitter
    const int ox = 7 + static_cast<int>(rng.next_below(5)) - 2;
    const int oy = 4 + static_cast<int>(rng.next_below(5)) - 2;
    const int w = 12, hh = 9;  // half-height per segment row
    const int th = 2 + static_cast<int>(rng.next_below(2));  // stroke thickness
    auto hline = [&](int y, int x0, int x1) {
        for (int t = 0; t < th; ++t)
            for (int x = x0; x <= x1; ++x) {
                const int yy = y + t, xx = x;
                if (yy >= 0 && yy < 28 && xx >= 0 && xx < 28) img(yy, xx) = 255.0;
            }
    };
    auto vline = [&](int x, int y0, int y1) {
        for (int t = 0; t < th; ++t)
            for (int y = y0; y <= y1; ++y) {
                const int yy = y, xx = x + t;
                if (yy >= 0 && yy < 28 && xx >= 0 && xx < 28) img(yy, xx) = 255.0;
            }
    };
    const std::uint8_t segs = kSegmentsByDigit[digit];
    if (segs & 0b0000001) hline(oy, ox, ox + w);                       // top
    if (segs & 0b0000010) vline(ox + w, oy, oy + hh);                  // top-right
    if (segs & 0b0000100) vline(ox + w, oy + hh, oy + 2 * hh);         // bottom-right
    if (segs & 0b0001000) hline(oy + 2 * hh, ox, ox + w);              // bottom
    if (segs & 0b0010000) vline(ox, oy + hh, oy + 2 * hh);             // bottom-left
    if (segs & 0b0100000) vline(ox, oy, oy + hh);                      // top-left
    if (segs & 0b1000000) hline(oy + hh, ox, ox + w);                  // middle
    // light per-pixel noise so samples within a class are not identical
    for (int y = 0; y < 28; ++y)
        for (int x = 0; x < 28; ++x) {
            const double n = 24.0 * rng.uniform();
            img(y, x) = std::clamp(img(y, x) + n - 12.0, 0.0, 255.0);
        }
    return img;
}

}  // namespace

MatrixXd block_average_rescale(const MatrixXd& img, int out_side) {
    const Eigen::Index in_rows = img.rows(), in_cols = img.cols();
    if (out_side < 1) throw std::invalid_argument("block_average_rescale: out_side must be >= 1");
    MatrixXd out(out_side, out_side);
    const double ry = static_cast<double>(in_rows) / out_side;
    const double rx = static_cast<double>(in_cols) / out_side;
    for (int r = 0; r < out_side; ++r) {
        for (int c = 0; c < out_side; ++c) {
            const double y0 = r * ry, y1 = (r + 1) * ry;
            const double x0 = c * rx, x1 = (c + 1) * rx;
            double acc = 0.0;
            for (Eigen::Index y = static_cast<Eigen::Index>(std::floor(y0)); y < in_rows && y < y1;
                 ++y) {
                const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
                if (wy <= 0) continue;
                for (Eigen::Index x = static_cast<Eigen::Index>(std::floor(x0));
                     x < in_cols && x < x1; ++x) {
                    const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
                    if (wx <= 0) continue;
                    acc += wy * wx * img(y, x);
                }
            }
            out(r, c) = acc / (ry * rx);
        }
    }
    return out;
}

Dataset synthetic_dataset(SyntheticKind kind, int n_s, int n_v, std::uint64_t seed, double noise) {
    if (n_s < 1 || n_v < 1) throw std::invalid_argument("synthetic_dataset: dimensions must be >= 1");
    Dataset ds;
    ds.samples.resize(n_s, n_v);
    Rng rng(seed);
    switch (kind) {
        case SyntheticKind::TwoClusters: {
            const double m_star = 0.5;
            for (int s = 0; s < n_s; ++s) {
                const double sign = (rng.next_u64() & 1) ? 1.0 : -1.0;
                for (int i = 0; i < n_v; ++i)
                    ds.samples(s, i) =
                        std::clamp(sign * m_star + noise * rng.normal(), -1.0, 1.0);
            }
            ds.source = "synthetic:two-clusters";
            break;
        }
        case SyntheticKind::BarsAndStripes: {
            const int side = square_side(n_v, "bars-and-stripes");
            for (int s = 0; s < n_s; ++s) {
                const bool rows_mode = (rng.next_u64() & 1) != 0;
                std::vector<double> line(static_cast<std::size_t>(side));
                for (int l = 0; l < side; ++l)
                    line[static_cast<std::size_t>(l)] = (rng.next_u64() & 1) ? 1.0 : -1.0;
                for (int r = 0; r < side; ++r)
                    for (int c = 0; c < side; ++c)
                        ds.samples(s, r * side + c) =
                            line[static_cast<std::size_t>(rows_mode ? r : c)];
            }
            ds.image_shape = {side, side};
            ds.source = "synthetic:bars-and-stripes";
            break;
        }
        case SyntheticKind::DownscaledDigits: {
            const int side = square_side(n_v, "downscaled-digits");
            for (int s = 0; s < n_s; ++s) {
                const int digit = static_cast<int>(rng.next_below(10));
                MatrixXd img28 = render_digit28(digit, rng);
                MatrixXd small = block_average_rescale(img28, side);
                for (int r = 0; r < side; ++r)
                    for (int c = 0; c < side; ++c)
                        ds.samples(s, r * side + c) = forward_transform(small(r, c));
                ds.labels.push_back(static_cast<std::uint8_t>(digit));
            }
            ds.image_shape = {side, side};
            ds.source = "synthetic:downscaled-digits";
            break;
        }
    }
    return ds;
}

void write_pgm(const std::string& path, int rows, int cols,
               const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != static_cast<std::size_t>(rows) * cols)
        throw std::invalid_argument("write_pgm: pixel buffer size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << cols << " " << rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

void export_image_grid(const MatrixXd& samples, std::pair<int, int> image_shape, int grid_cols,
                       const std::string& path) {
    const int ih = image_shape.first, iw = image_shape.second;
    if (samples.cols() != static_cast<Eigen::Index>(ih) * iw)
        throw std::invalid_argument("export_image_grid: samples not reshapeable to image_shape");
    if (grid_cols < 1) throw std::invalid_argument("export_image_grid: grid_cols must be >= 1");
    const int n = static_cast<int>(samples.rows());
    const int grid_rows = (n + grid_cols - 1) / grid_cols;
    const int H = grid_rows * ih, W = grid_cols * iw;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(H) * W, 0);
    for (int s = 0; s < n; ++s) {
        const int gr = s / grid_cols, gc = s % grid_cols;
        for (int y = 0; y < ih; ++y)
            for (int x = 0; x < iw; ++x) {
                const double px = inverse_transform_pixel(samples(s, y * iw + x));
                pixels[static_cast<std::size_t>(gr * ih + y) * W + (gc * iw + x)] =
                    static_cast<std::uint8_t>(px);
            }
    }
    write_pgm(path, H, W, pixels);
}

void export_receptive_fields(const RestrictedParams& params, const std::vector<int>& neuron_indices,
                             const std::string& path) {
    if (neuron_indices.empty())
        throw std::invalid_argument("export_receptive_fields: no neuron indices");
    const int side = square_side(params.n_v, "export_receptive_fields");
    const double g_div = params.g > 0.0 ? params.g : 1.0;

    MatrixXd fields(static_cast<Eigen::Index>(neuron_indices.size()), params.n_v);
    for (std::size_t k = 0; k < neuron_indices.size(); ++k) {
        const int a = neuron_indices[k];
        if (a < 0 || a >= params.n_h)
            throw std::invalid_argument("export_receptive_fields: neuron index out of range");
        fields.row(static_cast<Eigen::Index>(k)) =
            (params.W.col(a) + params.A.col(a)).transpose() / g_div;
    }
    const double lo = fields.minCoeff(), hi = fields.maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;

    const int count = static_cast<int>(neuron_indices.size());
    const int grid_cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
    const int grid_rows = (count + grid_cols - 1) / grid_cols;
    const int H = grid_rows * side, W = grid_cols * side;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(H) * W, 0);
    for (int k = 0; k < count; ++k) {
        const int gr = k / grid_cols, gc = k % grid_cols;
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const double val = (fields(k, y * side + x) - lo) / span * 255.0;
                pixels[static_cast<std::size_t>(gr * side + y) * W + (gc * side + x)] =
                    static_cast<std::uint8_t>(std::lround(val));
            }
    }
    write_pgm(path, H, W, pixels);

    std::ofstream sidecar(path + ".scale.txt");
    if (!sidecar) throw std::runtime_error("export_receptive_fields: cannot write sidecar");
    sidecar << "min=" << lo << " max=" << hi << " g=" << params.g << "\n";
}

}  // namespace chaosgen
