#include "ksf/snapshot.hpp"

#include <fstream>
#include <stdexcept>

namespace ksf {

namespace {
constexpr const char* kMagic = "KSFSNAP1";
}

void write_snapshot(const std::string& path, const FieldState& s, const TorusGrid& g, const std::string& kind,
                    const std::string& config_hash) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write snapshot " + path);
    const nlohmann::json h = {{"kind", kind},   {"n", s.lay.n},        {"t", s.t},
                              {"L", g.L()},     {"dims", g.dims()},    {"npts", s.npts()},
                              {"ncols", s.W.cols()}, {"config_hash", config_hash}};
    f << kMagic << "\n" << h.dump() << "\n";
    f.write(reinterpret_cast<const char*>(s.W.data()), static_cast<std::streamsize>(sizeof(double) * s.W.size()));
    if (!f) throw std::runtime_error("short write on snapshot " + path);
}

SnapshotHeader read_snapshot(const std::string& path, FieldState& s) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read snapshot " + path);
    std::string magic, line;
    std::getline(f, magic);
    if (magic != kMagic) throw std::runtime_error("not a snapshot file: " + path);
    std::getline(f, line);
    const auto j = nlohmann::json::parse(line);
    SnapshotHeader h;
    h.kind = j.at("kind").get<std::string>();
    h.n = j.at("n").get<int>();
    h.t = j.at("t").get<double>();
    h.L = j.at("L").get<double>();
    h.dims = j.at("dims").get<std::vector<int>>();
    h.npts = j.at("npts").get<long>();
    h.ncols = j.at("ncols").get<int>();
    h.config_hash = j.value("config_hash", "");
    s = FieldState(h.t, h.n, h.npts);
    if (s.W.cols() != h.ncols) throw std::runtime_error("snapshot column count does not match n");
    f.read(reinterpret_cast<char*>(s.W.data()), static_cast<std::streamsize>(sizeof(double) * s.W.size()));
    if (!f) throw std::runtime_error("truncated snapshot " + path);
    return h;
}

}  // namespace ksf
