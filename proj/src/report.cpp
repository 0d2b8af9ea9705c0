#include "dcms/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dcms/error.hpp"

namespace dcms {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

ordered_json to_json(const SnapshotReport& r) {
  ordered_json j;
  j["ordinal"] = r.ordinal;
  j["image_cms"] = r.image_cms;
  j["cluster_cms"] = r.cluster_cms;
  j["product_cms"] = r.product_cms;
  j["gap"] = r.factorization_gap;
  j["mmd2"] = r.mmd2 ? ordered_json(*r.mmd2) : ordered_json(nullptr);
  j["corollary_violation"] = r.corollary_violation;
  return j;
}

ordered_json header_json(const MonitorResult& result) {
  ordered_json clusters = ordered_json::array();
  for (const IndexSet& c : result.partition.clusters()) {
    clusters.push_back(std::vector<std::size_t>(c.begin(), c.end()));
  }
  ordered_json snapshots = ordered_json::array();
  for (const auto& r : result.reports) snapshots.push_back({{"ordinal", r.ordinal}, {"label", r.label}});
  ordered_json j;
  j["kernel"] = std::string(to_string(result.kernel.family));
  j["gamma"] = result.kernel.gamma;
  j["gamma_source"] = std::string(to_string(result.gamma_source));
  j["n_test"] = result.n_test;
  j["cms_batch"] = result.estimator.blocked ? ordered_json(result.estimator.cms_batch) : ordered_json(nullptr);
  j["drop_remainder"] = result.estimator.drop_remainder;
  j["partition"] = {{"d", result.partition.pixels()}, {"clusters", clusters}};
  j["snapshots"] = snapshots;
  return j;
}

std::string render_jsonl(const MonitorResult& result) {
  std::string out;
  for (const auto& r : result.reports) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

namespace {

std::string num(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::string coord(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.2f", v);
  return buf.data();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
  if (!out) throw InputError("cannot write " + path.string());
}

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string render_csv(const MonitorResult& result) {
  std::ostringstream out;
  out << "ordinal,image_cms,product_cms,mmd2";
  for (std::size_t c = 0; c < result.partition.size(); ++c) out << ",cluster_" << c + 1;
  out << '\n';
  for (const auto& r : result.reports) {
    out << r.ordinal << ',' << num(r.image_cms) << ',' << num(r.product_cms) << ',';
    if (r.mmd2) out << num(*r.mmd2);
    for (const double v : r.cluster_cms) out << ',' << num(v);
    out << '\n';
  }
  return out.str();
}

std::string render_svg(const MonitorResult& result) {
  constexpr double W = 960, H = 540;
  constexpr double left = 70, right = 190, top = 30, bottom = 50;
  const double pw = W - left - right;
  const double ph = H - top - bottom;
  const auto& reps = result.reports;

  double lo = 1.0, hi = 1.0;
  for (const auto& r : reps) {
    lo = std::min({lo, r.image_cms, r.product_cms});
    hi = std::max({hi, r.image_cms, r.product_cms});
    for (const double v : r.cluster_cms) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  lo = std::floor(lo * 20.0) / 20.0;
  hi = std::ceil(hi * 20.0) / 20.0;
  if (hi - lo < 0.05) lo = hi - 0.05;

  const double x0 = static_cast<double>(reps.front().ordinal);
  const double x1 = static_cast<double>(reps.back().ordinal);
  auto px = [&](double x) { return x1 == x0 ? left + pw / 2 : left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (hi - y) / (hi - lo) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 960 540\" width=\"960\" height=\"540\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"960\" height=\"540\" fill=\"white\"/>\n";
  s << "<rect x=\"" << coord(left) << "\" y=\"" << coord(top) << "\" width=\"" << coord(pw)
    << "\" height=\"" << coord(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (int t = 0; t <= 5; ++t) {
    const double y = lo + (hi - lo) * t / 5.0;
    s << "<line x1=\"" << coord(left) << "\" y1=\"" << coord(py(y)) << "\" x2=\"" << coord(left + pw)
      << "\" y2=\"" << coord(py(y)) << "\" stroke=\"#ddd\"/>\n";
    std::array<char, 16> label{};
    std::snprintf(label.data(), label.size(), "%.3f", y);
    s << "<text x=\"" << coord(left - 8) << "\" y=\"" << coord(py(y) + 4)
      << "\" text-anchor=\"end\">" << label.data() << "</text>\n";
  }
  const std::size_t step = std::max<std::size_t>(1, (reps.size() + 9) / 10);
  for (std::size_t k = 0; k < reps.size(); k += step) {
    const double x = px(static_cast<double>(reps[k].ordinal));
    s << "<text x=\"" << coord(x) << "\" y=\"" << coord(top + ph + 18) << "\" text-anchor=\"middle\">"
      << reps[k].ordinal << "</text>\n";
  }
  s << "<text x=\"" << coord(left + pw / 2) << "\" y=\"" << coord(H - 12)
    << "\" text-anchor=\"middle\">snapshot</text>\n";
  s << "<text x=\"18\" y=\"" << coord(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << coord(top + ph / 2) << ")\">CMS</text>\n";

  struct Series {
    std::string name;
    std::string color;
    std::string dash;
    std::vector<double> values;
  };
  std::vector<Series> series;
  series.push_back({"image", "#000000", "", {}});
  series.push_back({"product", "#555555", "6,4", {}});
  for (std::size_t c = 0; c < result.partition.size(); ++c) {
    series.push_back({"cluster " + std::to_string(c + 1), kPalette[c % kPalette.size()],
                      c < kPalette.size() ? "" : "2,2", {}});
  }
  for (const auto& r : reps) {
    series[0].values.push_back(r.image_cms);
    series[1].values.push_back(r.product_cms);
    for (std::size_t c = 0; c < r.cluster_cms.size(); ++c) series[c + 2].values.push_back(r.cluster_cms[c]);
  }

  for (const auto& sr : series) {
    s << "<polyline fill=\"none\" stroke=\"" << sr.color << "\" stroke-width=\"2\"";
    if (!sr.dash.empty()) s << " stroke-dasharray=\"" << sr.dash << "\"";
    s << " points=\"";
    for (std::size_t k = 0; k < reps.size(); ++k) {
      if (k) s << ' ';
      s << coord(px(static_cast<double>(reps[k].ordinal))) << ',' << coord(py(sr.values[k]));
    }
    s << "\"/>\n";
  }

  const double lx = left + pw + 20;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double ly = top + 10 + 20.0 * static_cast<double>(k);
    s << "<line x1=\"" << coord(lx) << "\" y1=\"" << coord(ly) << "\" x2=\"" << coord(lx + 24)
      << "\" y2=\"" << coord(ly) << "\" stroke=\"" << series[k].color << "\" stroke-width=\"2\"";
    if (!series[k].dash.empty()) s << " stroke-dasharray=\"" << series[k].dash << "\"";
    s << "/>\n<text x=\"" << coord(lx + 30) << "\" y=\"" << coord(ly + 4) << "\">" << series[k].name
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void report_emit(const MonitorResult& result, const fs::path& out_dir, ReportFormats formats) {
  if (result.reports.empty()) throw InputError("no reports to emit");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw InputError("cannot create directory " + out_dir.string());
  if (formats.json) {
    write_file(out_dir / "reports.jsonl", render_jsonl(result));
    write_file(out_dir / "header.json", header_json(result).dump(2) + "\n");
  }
  if (formats.csv) write_file(out_dir / "reports.csv", render_csv(result));
  if (formats.svg) write_file(out_dir / "reports.svg", render_svg(result));
}

}  // namespace dcms
