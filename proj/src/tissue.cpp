#include "eqshbc/tissue.hpp"

#include "eqshbc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace eqshbc {

ComplexAdmittivity admittivity(const TissueProperties &props,
                               double frequency_hz) {
  const double omega = 2.0 * kPi * frequency_hz;
  return {props.conductivity_s_per_m,
          omega * kEpsilon0 * props.relative_permittivity};
}

std::optional<std::string_view> tissue_name(Label label) {
  switch (label) {
  case Label::Air: return "air";
  case Label::Skin: return "skin";
  case Label::Muscle: return "muscle";
  default: return std::nullopt;
  }
}

TissueTable::TissueTable() {
  rows_["air"].push_back({"air", 0.0, 1.0, 0.0});
}

void TissueTable::add(TissueProperties props) {
  if (props.name.empty())
    throw Error(ErrorCode::ParseError, "empty tissue name");
  if (!(props.conductivity_s_per_m >= 0.0))
    throw Error(ErrorCode::NegativeConductivity,
                props.name + ": sigma = " +
                    std::to_string(props.conductivity_s_per_m));
  if (!(props.relative_permittivity >= 1.0))
    throw Error(ErrorCode::ParseError,
                props.name + ": eps_r must be >= 1");
  if (!(props.frequency_hz > 0.0))
    throw Error(ErrorCode::ParseError,
                props.name + ": frequency must be > 0");
  if (props.name == "air")
    return;
  auto &list = rows_[props.name];
  auto it = std::find_if(list.begin(), list.end(), [&](const auto &r) {
    return r.frequency_hz == props.frequency_hz;
  });
  if (it != list.end())
    *it = std::move(props);
  else
    list.push_back(std::move(props));
  std::sort(list.begin(), list.end(), [](const auto &a, const auto &b) {
    return a.frequency_hz < b.frequency_hz;
  });
}

bool TissueTable::has(std::string_view tissue) const {
  return rows_.find(tissue) != rows_.end();
}

const TissueProperties &TissueTable::lookup(std::string_view tissue,
                                            double frequency_hz) const {
  auto it = rows_.find(tissue);
  if (it == rows_.end() || it->second.empty())
    throw Error(ErrorCode::MissingTissue,
                "no entry for tissue '" + std::string(tissue) + "'");
  const auto &list = it->second;
  return *std::min_element(list.begin(), list.end(),
                           [&](const auto &a, const auto &b) {
                             return std::abs(a.frequency_hz - frequency_hz) <
                                    std::abs(b.frequency_hz - frequency_hz);
                           });
}

ComplexAdmittivity TissueTable::admittivity_of(std::string_view tissue,
                                               double frequency_hz) const {
  return admittivity(lookup(tissue, frequency_hz), frequency_hz);
}

void TissueTable::require_labels(const std::vector<Label> &labels) const {
  std::array<bool, kLabelCount> seen{};
  for (Label l : labels)
    seen[static_cast<std::size_t>(l)] = true;
  for (std::size_t n = 0; n < kLabelCount; ++n) {
    if (!seen[n])
      continue;
    if (auto name = tissue_name(static_cast<Label>(n)); name && !has(*name))
      throw Error(ErrorCode::MissingTissue,
                  "grid uses '" + std::string(*name) +
                      "' but the tissue table has no such row");
  }
}

std::vector<TissueProperties> TissueTable::rows() const {
  std::vector<TissueProperties> out;
  for (const auto &[name, list] : rows_)
    if (name != "air")
      out.insert(out.end(), list.begin(), list.end());
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view field, const std::string &where) {
  field = trim(field);
  double v = 0.0;
  const auto *end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::ParseError,
                where + ": not a number: '" + std::string(field) + "'");
  return v;
}

} // namespace

TissueTable load_tissue_table(std::istream &in, const std::string &source) {
  TissueTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos)
      body = body.substr(0, hash);
    body = trim(body);
    if (body.empty())
      continue;
    const std::string where = source + ":" + std::to_string(line_no);
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      auto comma = body.find(',', start);
      fields.push_back(body.substr(start, comma - start));
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    if (fields.size() != 4)
      throw Error(ErrorCode::ParseError,
                  where + ": expected 4 columns, got " +
                      std::to_string(fields.size()));
    // Header row.
    if (trim(fields[0]) == "tissue")
      continue;
    TissueProperties props;
    props.name = std::string(trim(fields[0]));
    props.frequency_hz = parse_double(fields[1], where);
    props.conductivity_s_per_m = parse_double(fields[2], where);
    props.relative_permittivity = parse_double(fields[3], where);
    try {
      table.add(std::move(props));
    } catch (const Error &e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return table;
}

TissueTable load_tissue_table_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot open tissue table " + path);
  return load_tissue_table(in, path);
}

void write_tissue_table(std::ostream &out, const TissueTable &table) {
  out << "tissue,frequency_hz,sigma_s_per_m,eps_r\n";
  out << std::setprecision(17);
  for (const auto &r : table.rows())
    out << r.name << ',' << r.frequency_hz << ',' << r.conductivity_s_per_m
        << ',' << r.relative_permittivity << '\n';
}

QsReport validate_quasistatic(double frequency_hz, double body_extent_m) {
  QsReport r;
  r.frequency_hz = frequency_hz;
  r.largest_body_extent_m = body_extent_m;
  if (!(frequency_hz > 0.0) || !(body_extent_m > 0.0)) {
    r.notes = "frequency and body extent must be positive";
    return r;
  }
  r.free_space_wavelength_m = kSpeedOfLight / frequency_hz;
  r.quasistatic_ok =
      r.free_space_wavelength_m >= kQuasistaticFactor * body_extent_m;
  std::ostringstream notes;
  notes << std::setprecision(6) << "wavelength " << r.free_space_wavelength_m
        << " m " << (r.quasistatic_ok ? ">=" : "<") << " "
        << kQuasistaticFactor << " x body extent " << body_extent_m << " m";
  r.notes = notes.str();
  return r;
}

} // namespace eqshbc
