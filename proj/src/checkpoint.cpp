#include "boed/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "boed/errors.hpp"

namespace boed {

namespace {

constexpr char kMagic[4] = {'B', 'N', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double x) {
    const auto v = std::bit_cast<std::uint64_t>(x);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void read_exact(std::istream& in, unsigned char* b, std::size_t n) {
    if (!in.read(reinterpret_cast<char*>(b), static_cast<std::streamsize>(n))) {
        throw ArtifactError("truncated checkpoint");
    }
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    read_exact(in, b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    read_exact(in, b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

void save_mlp(std::ostream& out, const Mlp& m) {
    put_u32(out, static_cast<std::uint32_t>(m.layers().size()));
    for (const DenseLayer& l : m.layers()) {
        put_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
        put_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
        out.put(static_cast<char>(l.activation));
        for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
            for (Eigen::Index j = 0; j < l.weight.cols(); ++j) put_f64(out, l.weight(i, j));
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) put_f64(out, l.bias(i));
    }
}

struct RawLayer {
    std::uint32_t in, out;
    Activation act;
    DenseLayer layer;
};

std::vector<RawLayer> load_mlp(std::istream& in) {
    const std::uint32_t count = get_u32(in);
    if (count == 0 || count > 64) throw ArtifactError("checkpoint has an implausible layer count");
    std::vector<RawLayer> layers;
    for (std::uint32_t k = 0; k < count; ++k) {
        RawLayer r;
        r.in = get_u32(in);
        r.out = get_u32(in);
        unsigned char act;
        read_exact(in, &act, 1);
        if (act > 1) throw ArtifactError("checkpoint has an unknown activation tag");
        r.act = static_cast<Activation>(act);
        if (!layers.empty() && layers.back().out != r.in) throw ArtifactError("checkpoint layer sizes do not chain");
        r.layer.activation = r.act;
        r.layer.weight.resize(r.out, r.in);
        r.layer.bias.resize(r.out);
        for (std::uint32_t i = 0; i < r.out; ++i)
            for (std::uint32_t j = 0; j < r.in; ++j) r.layer.weight(i, j) = get_f64(in);
        for (std::uint32_t i = 0; i < r.out; ++i) r.layer.bias(i) = get_f64(in);
        layers.push_back(std::move(r));
    }
    return layers;
}

std::vector<std::size_t> hidden_of(const std::vector<RawLayer>& layers) {
    std::vector<std::size_t> h;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) h.push_back(layers[i].out);
    return h;
}

}  // namespace

void save_checkpoint(std::ostream& out, const BoundNetwork& net) {
    const NetworkShape& s = net.shape();
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(s.blocks));
    put_u32(out, static_cast<std::uint32_t>(s.summary_dim));
    put_u32(out, static_cast<std::uint32_t>(s.variable_dim));
    put_u32(out, static_cast<std::uint32_t>(s.blocks + 1));
    for (const Mlp& m : net.summaries()) save_mlp(out, m);
    save_mlp(out, net.head());
    if (!out) throw ArtifactError("failed writing checkpoint");
}

BoundNetwork load_checkpoint(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ArtifactError("not a critic checkpoint");
    if (get_u32(in) != kVersion) throw ArtifactError("unsupported checkpoint version");
    NetworkShape shape;
    shape.blocks = get_u32(in);
    shape.summary_dim = get_u32(in);
    shape.variable_dim = get_u32(in);
    if (get_u32(in) != shape.blocks + 1) throw ArtifactError("checkpoint network count does not match blocks");

    std::vector<std::vector<RawLayer>> nets;
    for (std::size_t i = 0; i <= shape.blocks; ++i) nets.push_back(load_mlp(in));
    shape.block_input_dim = nets.front().front().in;
    shape.summary_hidden = hidden_of(nets.front());
    shape.head_hidden = hidden_of(nets.back());

    BoundNetwork net(shape);
    auto install = [](Mlp& target, std::vector<RawLayer>& raw) {
        if (target.layers().size() != raw.size()) throw ArtifactError("checkpoint layer count mismatch");
        for (std::size_t i = 0; i < raw.size(); ++i) {
            DenseLayer& t = target.layers()[i];
            if (t.weight.rows() != raw[i].layer.weight.rows() || t.weight.cols() != raw[i].layer.weight.cols() ||
                t.activation != raw[i].act) {
                throw ArtifactError("checkpoint layer shape mismatch");
            }
            t = std::move(raw[i].layer);
        }
    };
    for (std::size_t b = 0; b < shape.blocks; ++b) install(net.summaries()[b], nets[b]);
    install(net.head(), nets.back());
    return net;
}

void save_checkpoint(const std::filesystem::path& path, const BoundNetwork& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot open " + path.string() + " for writing");
    save_checkpoint(out, net);
}

BoundNetwork load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("missing checkpoint " + path.string());
    return load_checkpoint(in);
}

}  // namespace boed
