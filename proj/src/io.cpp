#include "dmera/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dmera {

void CsvTable::add(std::vector<Cell> row) {
  if (row.size() != header.size())
    throw std::invalid_argument("csv row has " + std::to_string(row.size()) + " fields, schema has " +
                                std::to_string(header.size()));
  rows.push_back(std::move(row));
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_cell(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) return quote(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, double>) return format_double(v);
        else return std::to_string(v);
      },
      cell);
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) out += (i ? "," : "") + quote(table.header[i]);
  out += "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += "\r\n";
  }
  return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename onto '" + path + "': " + ec.message());
  }
}

void write_csv(const CsvTable& table, const std::string& path) { write_text_atomic(path, to_csv(table)); }

std::size_t CsvText::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::invalid_argument("csv has no column '" + name + "'");
}

CsvText parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, any = false;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    any = true;
  };
  auto end_record = [&] {
    if (any || !field.empty()) end_field();
    if (!record.empty() && !(record.size() == 1 && record[0].empty())) records.push_back(record);
    record.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw std::invalid_argument("csv ends inside a quoted field");
  end_record();
  CsvText out;
  if (records.empty()) return out;
  out.header = records.front();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != out.header.size())
      throw std::invalid_argument("csv record " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                  " fields, header has " + std::to_string(out.header.size()));
    out.rows.push_back(records[r]);
  }
  return out;
}

CsvText read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

}  // namespace

std::vector<MeasuredPoint> read_measurements(const std::string& path) {
  const CsvText t = read_csv(path);
  const std::size_t cl = t.column("layer"), co = t.column("observable"), cm = t.column("mean"),
                    cn = t.column("n_samples");
  std::vector<MeasuredPoint> out;
  for (const auto& r : t.rows) {
    if (!is_known_observable(r[co])) throw std::invalid_argument("unknown observable '" + r[co] + "' in " + path);
    out.push_back({static_cast<int>(parse_double(r[cl])), r[co], parse_double(r[cm]), parse_double(r[cn])});
  }
  return out;
}

CsvTable spectrum_table(const Spectrum& spectrum) {
  CsvTable t{{"index", "re_lambda", "im_lambda", "modulus", "delta", "residual"}, {}};
  long long i = 0;
  for (const auto& e : spectrum.pairs)
    t.add({i++, e.lambda.real(), e.lambda.imag(), std::abs(e.lambda), e.delta, e.residual});
  return t;
}

CsvTable dynamics_table(const TimeSeries& series) {
  CsvTable t{{"layer", "observable", "value"}, {}};
  for (const auto& r : series.rows) t.add({static_cast<long long>(r.layer), r.observable, r.value});
  return t;
}

CsvTable sweep_table(const SweepResult& sweep) {
  CsvTable t{{"epsilon", "energy", "percent_error"}, {}};
  for (const auto& r : sweep.rows) t.add({r.epsilon, r.energy, r.percent_error});
  return t;
}

CsvTable ensemble_table(const std::vector<EnsembleResult>& results) {
  CsvTable t{{"depth", "mean_slope", "stderr", "n"}, {}};
  for (const auto& r : results)
    t.add({static_cast<long long>(r.depth), r.mean_slope, r.stderr_slope, static_cast<long long>(r.n)});
  return t;
}

CsvTable dilution_table(const std::vector<DilutionRow>& rows) {
  CsvTable t{{"L", "ell", "layer", "fidelity", "stderr"}, {}};
  for (const auto& r : rows)
    t.add({static_cast<long long>(r.L), static_cast<long long>(r.ell), static_cast<long long>(r.layer), r.fidelity,
           r.stderr_fidelity});
  return t;
}

CsvTable fit_table(const FitResult& fit) {
  CsvTable t{{"sigma2", "residual"}, {}};
  for (const auto& [s, r] : fit.grid) t.add({s, r});
  return t;
}

std::string profile_digest(const AngleProfile& profile) {
  nlohmann::json j;
  j["depth"] = profile.depth;
  j["thetas"] = profile.thetas;
  j["variant"] = to_string(profile.variant);
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dmera
