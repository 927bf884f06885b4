#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dirt/dirt.hpp"
#include "dirt/errors.hpp"

// .dirt binary layout (all little-endian, reals f64):
//   magic "DIRT", u32 version,
//   u32 d_y, u32 d_theta, u8 reference kind, f64 reference bound,
//   u32 n_layers, f64 betas[n_layers],
//   per layer: per dim {u32 n_nodes, f64 lo, f64 hi, f64 nodes[n]},
//              u32 ranks[d+1], core tensors, marginal tensor shapes + data,
//              f64 z_tt, f64 z_total, f64 gamma,
//   u8 has_preconditioner [+ preconditioner block].

namespace dirt {

namespace {

constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "dirt file format requires a little-endian host");

struct Writer {
    std::ofstream out;
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw IoError("cannot open '" + path + "' for writing");
    }
    void bytes(const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out) throw IoError("write failed");
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void vec(const Eigen::VectorXd& v) { bytes(v.data(), sizeof(double) * v.size()); }
    void mat(const Eigen::MatrixXd& m) { bytes(m.data(), sizeof(double) * m.size()); }
};

struct Reader {
    std::ifstream in;
    explicit Reader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw IoError("cannot open '" + path + "' for reading");
    }
    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n)) throw IoError("truncated dirt file");
    }
    std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
    double f64() { double v; bytes(&v, 8); return v; }
    Eigen::VectorXd vec(std::size_t n) {
        Eigen::VectorXd v(n);
        bytes(v.data(), sizeof(double) * n);
        return v;
    }
    Eigen::MatrixXd mat(std::size_t rows, std::size_t cols) {
        Eigen::MatrixXd m(rows, cols);
        bytes(m.data(), sizeof(double) * rows * cols);
        return m;
    }
};

void write_core(Writer& w, const TTCore& c) {
    w.u32(static_cast<std::uint32_t>(c.r_left()));
    w.u32(static_cast<std::uint32_t>(c.n()));
    w.u32(static_cast<std::uint32_t>(c.r_right()));
    for (const auto& s : c.slice) w.mat(s);
}

TTCore read_core(Reader& r) {
    const std::uint32_t rl = r.u32(), n = r.u32(), rr = r.u32();
    if (rl == 0 || n == 0 || rr == 0 || rl > 100000 || n > 100000 || rr > 100000)
        throw IoError("corrupt core shape in dirt file");
    TTCore c;
    c.slice.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) c.slice.push_back(r.mat(rl, rr));
    return c;
}

void write_precond(Writer& w, const Preconditioner& p) {
    w.u8(p.strategy == Preconditioner::Strategy::reorder ? 0 : 1);
    w.u32(static_cast<std::uint32_t>(p.full_d_y()));
    w.u32(static_cast<std::uint32_t>(p.full_d_theta()));
    w.u32(static_cast<std::uint32_t>(p.n_y));
    w.u32(static_cast<std::uint32_t>(p.n_theta));
    for (int i : p.order_y) w.u32(static_cast<std::uint32_t>(i));
    for (int i : p.order_theta) w.u32(static_cast<std::uint32_t>(i));
    w.vec(p.spectrum_y);
    w.vec(p.spectrum_theta);
    w.mat(p.rotate_y);
    w.mat(p.rotate_theta);
    w.mat(p.whiten_y);
    w.mat(p.unwhiten_y);
    w.mat(p.whiten_theta);
    w.mat(p.unwhiten_theta);
    w.vec(p.shift_y);
    w.vec(p.shift_theta);
}

Preconditioner read_precond(Reader& r) {
    Preconditioner p;
    p.strategy = r.u8() == 0 ? Preconditioner::Strategy::reorder : Preconditioner::Strategy::rotate;
    const std::uint32_t dy = r.u32(), dt = r.u32();
    p.n_y = static_cast<int>(r.u32());
    p.n_theta = static_cast<int>(r.u32());
    p.order_y.resize(dy);
    for (auto& i : p.order_y) i = static_cast<int>(r.u32());
    p.order_theta.resize(dt);
    for (auto& i : p.order_theta) i = static_cast<int>(r.u32());
    p.spectrum_y = r.vec(dy);
    p.spectrum_theta = r.vec(dt);
    p.rotate_y = r.mat(dy, dy);
    p.rotate_theta = r.mat(dt, dt);
    p.whiten_y = r.mat(dy, dy);
    p.unwhiten_y = r.mat(dy, dy);
    p.whiten_theta = r.mat(dt, dt);
    p.unwhiten_theta = r.mat(dt, dt);
    p.shift_y = r.vec(dy);
    p.shift_theta = r.vec(dt);
    p.tail_bound = p.bound_at(p.n_y, p.n_theta);
    return p;
}

} // namespace

void DirtTransport::save(const std::string& path) const {
    Writer w(path);
    w.bytes("DIRT", 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(dims().d_y));
    w.u32(static_cast<std::uint32_t>(dims().d_theta));
    w.u8(reference_.kind() == ReferenceMeasure::Kind::uniform01 ? 0 : 1);
    w.f64(reference_.bound());
    w.u32(static_cast<std::uint32_t>(layers_.size()));
    for (double b : betas_) w.f64(b);
    for (const auto& layer : layers_) {
        const auto& tt = layer.tt();
        for (int k = 0; k < tt.ndim(); ++k) {
            const auto& basis = tt.basis(k);
            w.u32(static_cast<std::uint32_t>(basis.size()));
            w.f64(basis.interval().lo);
            w.f64(basis.interval().hi);
            w.vec(basis.nodes());
        }
        for (int rank : tt.ranks()) w.u32(static_cast<std::uint32_t>(rank));
        for (const auto& core : tt.cores()) write_core(w, core);
        for (const auto& core : layer.marginal_tensors()) write_core(w, core);
        w.f64(layer.tt_norm_constant());
        w.f64(layer.norm_constant());
        w.f64(layer.gamma());
    }
    w.u8(precond_ ? 1 : 0);
    if (precond_) write_precond(w, *precond_);
    w.out.flush();
    if (!w.out) throw IoError("write failed while flushing '" + path + "'");
}

DirtTransport DirtTransport::load(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "DIRT", 4) != 0) throw IoError("'" + path + "' is not a dirt transport file");
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw IoError("dirt file version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kVersion) + ")");
    const int dy = static_cast<int>(r.u32());
    const int dt = static_cast<int>(r.u32());
    const Dims dims{dy, dt};
    const int d = dims.total();
    if (d <= 0 || d > 10000) throw IoError("corrupt dims in dirt file");
    const std::uint8_t ref_kind = r.u8();
    const double bound = r.f64();
    const ReferenceMeasure ref = ref_kind == 0 ? ReferenceMeasure::uniform(d)
                                               : ReferenceMeasure::truncated_gaussian(d, bound);
    const std::uint32_t n_layers = r.u32();
    if (n_layers == 0 || n_layers > 10000) throw IoError("corrupt layer count in dirt file");
    std::vector<double> betas(n_layers);
    for (auto& b : betas) b = r.f64();

    std::vector<SirtTransport> layers;
    layers.reserve(n_layers);
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        std::vector<Basis1D> bases;
        for (int k = 0; k < d; ++k) {
            const std::uint32_t n = r.u32();
            if (n < 2 || n > 1000000) throw IoError("corrupt node count in dirt file");
            const double lo = r.f64(), hi = r.f64();
            bases.emplace_back(Interval1D{lo, hi}, r.vec(n));
        }
        for (int k = 0; k < d + 1; ++k) (void)r.u32(); // rank vector is implied by the cores
        std::vector<TTCore> cores;
        for (int k = 0; k < d; ++k) cores.push_back(read_core(r));
        std::vector<TTCore> marginal;
        for (int k = 0; k < d; ++k) marginal.push_back(read_core(r));
        const double z_tt = r.f64();
        const double z_total = r.f64();
        const double gamma = r.f64();
        FunctionalTensorTrain tt(std::move(cores), std::move(bases), dims);
        layers.push_back(SirtTransport::from_parts(std::move(tt), std::move(marginal), ref, gamma,
                                                   z_tt, z_total));
    }
    std::optional<Preconditioner> precond;
    if (r.u8() == 1) precond = read_precond(r);
    return DirtTransport::from_parts(std::move(layers), std::move(betas), ref, std::move(precond), {});
}

} // namespace dirt
