#include "boed/trajectory_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "boed/errors.hpp"

namespace boed {

namespace {

constexpr std::array<char, 4> kMagic{'B', 'T', 'R', 'J'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ArtifactError("truncated trajectory cache");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_trajectories_csv(std::ostream& out, const std::vector<Trajectory>& ys) {
    out << "sample_id,block,trial,choice,reward\n";
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const Trajectory& y = ys[i];
        for (std::size_t b = 0; b < y.blocks; ++b)
            for (std::size_t t = 0; t < y.trials; ++t)
                out << i << ',' << b << ',' << t << ',' << int(y.choice(b, t)) << ','
                    << int(y.reward(b, t)) << '\n';
    }
}

std::vector<Trajectory> read_trajectories_csv(std::istream& in, std::size_t arms) {
    std::string line;
    if (!std::getline(in, line) || line != "sample_id,block,trial,choice,reward") {
        throw ArtifactError("trajectory CSV has an unexpected header");
    }
    struct Row {
        std::size_t sample, block, trial;
        int choice, reward;
    };
    std::vector<Row> rows;
    std::size_t blocks = 0, trials = 0, samples = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Row r{};
        char c1, c2, c3, c4;
        std::istringstream ss(line);
        if (!(ss >> r.sample >> c1 >> r.block >> c2 >> r.trial >> c3 >> r.choice >> c4 >> r.reward) ||
            c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
            throw ArtifactError("malformed trajectory CSV row: " + line);
        }
        if (r.choice < 0 || static_cast<std::size_t>(r.choice) >= arms || (r.reward != 0 && r.reward != 1)) {
            throw ArtifactError("trajectory CSV value out of range: " + line);
        }
        blocks = std::max(blocks, r.block + 1);
        trials = std::max(trials, r.trial + 1);
        samples = std::max(samples, r.sample + 1);
        rows.push_back(r);
    }
    if (rows.size() != samples * blocks * trials) throw ArtifactError("trajectory CSV is not rectangular");
    std::vector<Trajectory> ys(samples, Trajectory(blocks, trials, arms));
    for (const Row& r : rows) ys[r.sample].record(r.block, r.trial, r.choice, r.reward == 1);
    return ys;
}

void write_trajectory_cache(const std::filesystem::path& path, const std::vector<Trajectory>& ys) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArtifactError("cannot open " + path.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint64_t>(out, ys.size());
    const Trajectory shape = ys.empty() ? Trajectory() : ys.front();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.blocks));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.trials));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.arms));
    for (const Trajectory& y : ys) {
        if (y.blocks != shape.blocks || y.trials != shape.trials || y.arms != shape.arms) {
            throw DomainError("trajectory cache requires identically shaped trajectories");
        }
        out.write(reinterpret_cast<const char*>(y.choices.data()), y.choices.size());
        out.write(reinterpret_cast<const char*>(y.rewards.data()), y.rewards.size());
    }
    if (!out) throw ArtifactError("failed writing " + path.string());
}

std::vector<Trajectory> read_trajectory_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot open " + path.string());
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ArtifactError("not a trajectory cache");
    if (get_le<std::uint32_t>(in) != kVersion) throw ArtifactError("unsupported trajectory cache version");
    const auto n = get_le<std::uint64_t>(in);
    const auto blocks = get_le<std::uint32_t>(in);
    const auto trials = get_le<std::uint32_t>(in);
    const auto arms = get_le<std::uint32_t>(in);
    std::vector<Trajectory> ys;
    ys.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Trajectory y(blocks, trials, arms);
        if (!in.read(reinterpret_cast<char*>(y.choices.data()), y.choices.size()) ||
            !in.read(reinterpret_cast<char*>(y.rewards.data()), y.rewards.size())) {
            throw ArtifactError("truncated trajectory cache");
        }
        ys.push_back(std::move(y));
    }
    return ys;
}

}  // namespace boed
