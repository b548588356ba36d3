#pragma once

#include <string>

#include <json.hpp>

#include "ksf/grid.hpp"
#include "ksf/state.hpp"

namespace ksf {

// File layout: the line "KSFSNAP1", one line of JSON header, then npts*ncols raw doubles (column-major).
struct SnapshotHeader {
    std::string kind;  // "frame" or "rescaled"
    int n = 4;
    double t = 0;
    double L = 0;
    std::vector<int> dims;
    long npts = 0;
    int ncols = 0;
    std::string config_hash;
};

void write_snapshot(const std::string& path, const FieldState& s, const TorusGrid& g, const std::string& kind,
                    const std::string& config_hash = "");
SnapshotHeader read_snapshot(const std::string& path, FieldState& s);

}  // namespace ksf
