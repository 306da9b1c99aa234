#pragma once

#include "eqshbc/phantom.hpp"

#include <complex>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eqshbc {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kEpsilon0 = 8.8541878128e-12;
inline constexpr double kPi = 3.14159265358979323846;

// sigma + j*omega*eps0*eps_r, in S/m.
using ComplexAdmittivity = std::complex<double>;

struct TissueProperties {
  std::string name;
  double conductivity_s_per_m = 0.0;
  double relative_permittivity = 1.0;
  double frequency_hz = 0.0;
};

ComplexAdmittivity admittivity(const TissueProperties &props,
                               double frequency_hz);

// Tissue name used for a material label ("air", "skin", "muscle"); nullopt
// for Dirichlet labels, which carry no material of their own.
std::optional<std::string_view> tissue_name(Label label);

class TissueTable {
public:
  TissueTable();

  // Rejects negative conductivity and eps_r < 1.
  void add(TissueProperties props);

  bool has(std::string_view tissue) const;
  // Row with the frequency closest to frequency_hz; throws MissingTissue.
  const TissueProperties &lookup(std::string_view tissue,
                                 double frequency_hz) const;
  ComplexAdmittivity admittivity_of(std::string_view tissue,
                                    double frequency_hz) const;
  // Throws MissingTissue for the first material label in labels that has no
  // row.
  void require_labels(const std::vector<Label> &labels) const;

  // All rows except the implicit air entry, ordered by (tissue, frequency).
  std::vector<TissueProperties> rows() const;

private:
  std::map<std::string, std::vector<TissueProperties>, std::less<>> rows_;
};

// Columns: tissue,frequency_hz,sigma_s_per_m,eps_r; '#' starts a comment.
TissueTable load_tissue_table(std::istream &in,
                              const std::string &source = "<stream>");
TissueTable load_tissue_table_file(const std::string &path);
void write_tissue_table(std::ostream &out, const TissueTable &table);

struct QsReport {
  double frequency_hz = 0.0;
  double free_space_wavelength_m = 0.0;
  double largest_body_extent_m = 0.0;
  bool quasistatic_ok = false;
  std::string notes;
};

inline constexpr double kQuasistaticFactor = 10.0;

// Never throws; quasistatic_ok iff c/f >= 10 * extent.
QsReport validate_quasistatic(double frequency_hz, double body_extent_m);

} // namespace eqshbc
