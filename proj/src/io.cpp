#include "bcl/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bcl::io {

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

void write_text(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
  f << body;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ostringstream o;
  for (size_t i = 0; i < header.size(); ++i) o << (i ? "," : "") << header[i];
  o << "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << fmt(r[i]);
    o << "\n";
  }
  write_text(path, o.str());
}

void write_coeffs_csv(const std::string& path, const PeriodicPotential& V) {
  std::vector<std::vector<double>> rows;
  for (int m = -V.max_index(); m <= V.max_index(); ++m) rows.push_back({double(m), V.coeff(m).real(), V.coeff(m).imag()});
  write_csv(path, {"m", "re", "im"}, rows);
}

void write_bands_csv(const std::string& path, const BandStructure& bs) {
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < bs.p.size(); ++i)
    for (int n = 1; n <= bs.n_max; ++n) rows.push_back({bs.p[i], double(n), bs.E(i, n - 1), bs.G(i, n - 1)});
  write_csv(path, {"p", "n", "E", "G"}, rows);
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr, const std::string& branch) {
  std::ostringstream o;
  o << "t,q,p,S,branch\n";
  for (size_t k = 0; k < tr.size(); ++k)
    o << fmt(tr.t[k]) << "," << fmt(tr.q[k]) << "," << fmt(tr.p[k]) << "," << fmt(tr.S[k]) << "," << branch << "\n";
  write_text(path, o.str());
}

void write_envelope(const std::string& stem, const Envelope& e) {
  std::vector<std::vector<double>> rows;
  for (int j = 0; j < e.size(); ++j) rows.push_back({e.y(j), e.v[j].real(), e.v[j].imag()});
  write_csv(stem + ".csv", {"y", "re", "im"}, rows);
  nlohmann::json h = {{"t_or_s", e.t}, {"norm", e.norm()}, {"sigma1", sigma_norm(e, 1)}};
  write_text(stem + ".json", h.dump(2) + "\n");
}

void write_state(const std::string& stem, const GridState& g, int stride) {
  std::ofstream f(stem + ".bin", std::ios::binary);
  for (int j = 0; j < g.N(); ++j) {
    float re = static_cast<float>(g.psi[j].real()), im = static_cast<float>(g.psi[j].imag());
    // little-endian hosts only; the sidecar records the layout
    f.write(reinterpret_cast<const char*>(&re), 4);
    f.write(reinterpret_cast<const char*>(&im), 4);
  }
  nlohmann::json h = {{"L", g.L}, {"N", g.N()}, {"epsilon", g.epsilon()}, {"t", g.t}, {"layout", "complex64-le"}};
  write_text(stem + ".json", h.dump(2) + "\n");
  std::vector<std::vector<double>> rows;
  for (int j = 0; j < g.N(); j += std::max(1, stride)) rows.push_back({g.x(j), g.psi[j].real(), g.psi[j].imag(), std::abs(g.psi[j])});
  write_csv(stem + "_preview.csv", {"x", "re", "im", "abs"}, rows);
}

void write_svg(const std::string& path, const std::string& title, const std::vector<Series>& series, bool logx,
               bool logy) {
  const double W = 640, H = 420, ml = 60, mr = 20, mt = 30, mb = 40;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (ty(v) - y0) / (y1 - y0) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  char lab[64];
  std::snprintf(lab, sizeof lab, "%.3g .. %.3g%s", x0, x1, logx ? " (log10)" : "");
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"11\">" << lab << "</text>\n";
  std::snprintf(lab, sizeof lab, "%.3g .. %.3g%s", y0, y1, logy ? " (log10)" : "");
  o << "<text x=\"12\" y=\"" << H / 2 << "\" font-size=\"11\" transform=\"rotate(-90 12 " << H / 2 << ")\">" << lab
    << "</text>\n";
  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    o << "<polyline fill=\"none\" stroke=\"" << colors[k % 6] << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
      o << px(s.x[i]) << "," << py(s.y[i]) << " ";
    }
    o << "\"/>\n";
    o << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 16 + 14 * k << "\" font-size=\"11\" fill=\"" << colors[k % 6]
      << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  write_text(path, o.str());
}

}  // namespace bcl::io
