#pragma once

#include <string>
#include <vector>

#include "bcl/ansatz.hpp"
#include "bcl/bloch.hpp"
#include "bcl/classical.hpp"
#include "bcl/envelope.hpp"

namespace bcl::io {

void ensure_dir(const std::string& dir);
void write_text(const std::string& path, const std::string& body);

// Fixed 17-significant-digit formatting so identical runs give identical files.
std::string fmt(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_coeffs_csv(const std::string& path, const PeriodicPotential& V);
void write_bands_csv(const std::string& path, const BandStructure& bs);
void write_trajectory_csv(const std::string& path, const Trajectory& tr, const std::string& branch);
void write_envelope(const std::string& stem, const Envelope& e);  // stem.csv + stem.json
void write_state(const std::string& stem, const GridState& g, int preview_stride = 16);

struct Series {
  std::string label;
  std::vector<double> x, y;
};
// Minimal line-plot SVG; log axes optional.
void write_svg(const std::string& path, const std::string& title, const std::vector<Series>& series,
               bool logx = false, bool logy = false);

}  // namespace bcl::io
