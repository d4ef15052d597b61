#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "igbeat/errors.hpp"
#include "igbeat/eval.hpp"
#include "text_util.hpp"

namespace igbeat::eval {
namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_ks_csv(std::ostream& out, const KSReport& r) {
  out << "# n=" << r.size() << " ksd=" << detail::format_double(r.ksd)
      << " bound=" << detail::format_double(r.bound) << " pass=" << (r.pass ? 1 : 0) << '\n';
  out << "q,u,lower_band,upper_band\n";
  for (std::size_t i = 0; i < r.sorted_u.size(); ++i) {
    const double q = r.quantile[i];
    out << detail::format_double(q) << ',' << detail::format_double(r.sorted_u[i]) << ','
        << detail::format_double(std::max(0.0, q - r.bound)) << ','
        << detail::format_double(std::min(1.0, q + r.bound)) << '\n';
  }
}

void write_ks_svg(std::ostream& out, const KSReport& r, const std::string& title) {
  constexpr double W = 420, H = 420, M = 50;
  const double side = W - 2 * M;
  auto px = [&](double q) { return M + q * side; };
  auto py = [&](double u) { return H - M - u * side; };
  std::ostringstream s;
  s.precision(5);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << side << "\" height=\"" << side
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  // identity line and the +/- bound band
  s << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
    << "\" stroke=\"#888\"/>\n";
  for (double sign : {-1.0, 1.0}) {
    s << "<polyline fill=\"none\" stroke=\"#888\" stroke-dasharray=\"4 3\" points=\"";
    for (double q : {0.0, 1.0}) {
      const double u = std::clamp(q + sign * r.bound, 0.0, 1.0);
      s << px(q) << ',' << py(u) << ' ';
    }
    s << "\"/>\n";
  }
  s << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < r.sorted_u.size(); ++i) {
    s << px(r.quantile[i]) << ',' << py(r.sorted_u[i]) << ' ';
  }
  s << "\"/>\n";
  if (!r.pass && !r.sorted_u.empty()) {
    const std::size_t k = r.max_index;
    s << "<circle cx=\"" << px(r.quantile[k]) << "\" cy=\"" << py(r.sorted_u[k])
      << "\" r=\"6\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" class=\"max-deviation\"/>\n";
  }
  s << "<text x=\"" << M << "\" y=\"" << M - 18 << "\" font-family=\"sans-serif\" font-size=\"12\">"
    << xml_escape(title) << (title.empty() ? "" : "  ") << "KSD " << r.ksd << " / bound "
    << r.bound << (r.pass ? " (pass)" : " (fail)") << "</text>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 15
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">quantile</text>\n";
  s << "<text x=\"15\" y=\"" << H / 2 << "\" transform=\"rotate(-90 15 " << H / 2
    << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">u</text>\n";
  s << "</svg>\n";
  out << s.str();
}

void write_ks_plot(const std::filesystem::path& stem, const KSReport& r, const std::string& title) {
  auto csv_path = stem;
  csv_path += ".csv";
  auto svg_path = stem;
  svg_path += ".svg";
  std::ofstream csv(csv_path);
  std::ofstream svg(svg_path);
  if (!csv || !svg) throw IoError("cannot write KS plot files at " + stem.string());
  write_ks_csv(csv, r);
  write_ks_svg(svg, r, title);
}

}  // namespace igbeat::eval
