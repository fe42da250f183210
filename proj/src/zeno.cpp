#include "zpm/zeno.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "zpm/io.hpp"

namespace zpm {

namespace {

constexpr double kThetas[] = {0.2, 0.8, 1.5};
constexpr std::pair<double, int> kStrengths[] = {{0.1, 10}, {0.2, 5}, {0.5, 2}};

Table1Row run_row(double theta_over_quarter_pi, double tau_tilde, int loops) {
  const double theta = theta_over_quarter_pi * std::numbers::pi / 4;
  const auto psi0 = make_state(theta);
  const auto r = run_protective_measurement(psi0, ZenoConfig{tau_tilde, loops, 0.0}, 1.0);
  return {theta_over_quarter_pi, tau_tilde, loops, r.survival, r.rescaled_shift, std::cos(2 * theta)};
}

bool same_key(const Table1Row& a, const Table1Row& b) {
  return std::abs(a.theta_over_quarter_pi - b.theta_over_quarter_pi) < 1e-9 &&
         std::abs(a.tau_tilde - b.tau_tilde) < 1e-9 && a.loops == b.loops;
}

}  // namespace

const std::vector<Table1Row>& table1_golden() {
  static const std::vector<Table1Row> rows = {
      {0.2, 0.1, 10, 0.994, 0.951, 0.951},  {0.2, 0.2, 5, 0.988, 0.952, 0.951},
      {0.2, 0.5, 2, 0.972, 0.961, 0.951},   {0.8, 0.1, 10, 0.946, 0.310, 0.310},
      {0.8, 0.2, 5, 0.894, 0.313, 0.310},   {0.8, 0.5, 2, 0.753, 0.353, 0.310},
      {1.5, 0.1, 10, 0.967, -0.708, -0.707}, {1.5, 0.2, 5, 0.940, -0.712, -0.707},
      {1.5, 0.5, 2, 0.859, -0.757, -0.707},
  };
  return rows;
}

std::vector<Table1Row> reproduce_table1(const std::vector<double>& extra_tau_tilde) {
  std::vector<Table1Row> rows;
  for (double th : kThetas)
    for (auto [tt, loops] : kStrengths) rows.push_back(run_row(th, tt, loops));
  for (double tt : extra_tau_tilde) {
    require(tt > 0, ErrorKind::InvalidParameter, "extra tau_tilde must be > 0");
    const int loops = std::max(1, static_cast<int>(std::lround(1.0 / tt)));
    for (double th : kThetas) rows.push_back(run_row(th, tt, loops));
  }
  return rows;
}

void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows) {
  os << "theta_over_quarter_pi,tau_tilde,loops,survival,rescaled_shift,expectation\n";
  for (const auto& r : rows) {
    os << io::format_double(r.theta_over_quarter_pi) << ',' << io::format_double(r.tau_tilde) << ',' << r.loops << ','
       << io::format_double(r.survival) << ',' << io::format_double(r.rescaled_shift) << ','
       << io::format_double(r.expectation) << '\n';
  }
}

std::vector<Table1Row> read_table1_csv(std::istream& is) {
  std::vector<Table1Row> rows;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    if (header) {
      header = false;
      if (line.rfind("theta_over_quarter_pi", 0) == 0) continue;
    }
    const auto f = io::split_csv_line(line);
    require(f.size() == 6, ErrorKind::Io, "table row needs 6 fields: " + line);
    rows.push_back({io::parse_double(f[0]), io::parse_double(f[1]), static_cast<int>(io::parse_double(f[2])),
                    io::parse_double(f[3]), io::parse_double(f[4]), io::parse_double(f[5])});
  }
  return rows;
}

std::vector<Table1Mismatch> compare_table1(const std::vector<Table1Row>& rows, const std::vector<Table1Row>& golden,
                                           double tol) {
  std::vector<Table1Mismatch> bad;
  for (const auto& g : golden) {
    const Table1Row* hit = nullptr;
    for (const auto& r : rows)
      if (same_key(r, g)) {
        hit = &r;
        break;
      }
    if (hit == nullptr) {
      bad.push_back({g, Table1Row{g.theta_over_quarter_pi, g.tau_tilde, g.loops, NAN, NAN, NAN}, INFINITY, INFINITY});
      continue;
    }
    const double es = std::abs(hit->survival - g.survival);
    const double eh = std::abs(hit->rescaled_shift - g.rescaled_shift);
    if (!(es <= tol) || !(eh <= tol)) bad.push_back({g, *hit, es, eh});
  }
  return bad;
}

}  // namespace zpm
