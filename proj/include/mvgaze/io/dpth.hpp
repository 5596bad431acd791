#pragma once

#include <string>

#include "mvgaze/depth.hpp"
#include "mvgaze/gaze_field.hpp"

namespace mvgaze::io {

/// DPTH container: "DPTH" magic, u32 width, u32 height, float32 row-major
/// values, little-endian throughout.
void write_dpth(const std::string& path, int width, int height, const std::vector<double>& values);

DepthMap read_depth(const std::string& path);       // validates positivity
FovHeatmap read_heatmap_dpth(const std::string& path);  // raw values, no check

inline void write_dpth(const std::string& path, const DepthMap& d) {
  write_dpth(path, d.width, d.height, d.values);
}
inline void write_dpth(const std::string& path, const FovHeatmap& h) {
  write_dpth(path, h.width, h.height, h.values);
}

}  // namespace mvgaze::io
