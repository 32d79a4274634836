#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "gsu/core/error.hpp"
#include "gsu/simkernel/genotype.hpp"
#include "gsu/simkernel/phenotype.hpp"

namespace gsu::io {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// 64-bit FNV-1a, used to fingerprint inputs in run reports.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string("fnv1a64:") + buf;
}

/// Writes via a sibling temp file and rename, so readers never see a partial file.
inline void write_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path() && !fs::exists(target.parent_path())) {
    throw InputError("output directory '" + target.parent_path().string() + "' does not exist");
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw InputError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw InputError("cannot move output into place at '" + path + "': " + ec.message());
  }
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_of_row;  // 1-based source line numbers
};

inline Table parse_tsv(std::string_view text, const std::string& path) {
  Table t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (pos > text.size()) break;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cells.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw InputError(path + ": line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                       " tab-separated fields, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_of_row.push_back(line_no);
  }
  if (!have_header) throw InputError(path + ": file is empty");
  return t;
}

inline void check_unique_ids(const Table& t, const std::string& path) {
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& id = t.rows[r][0];
    if (id.empty()) throw InputError(path + ": line " + std::to_string(t.line_of_row[r]) + ": empty subject id");
    if (!seen.insert(id).second) {
      throw InputError(path + ": line " + std::to_string(t.line_of_row[r]) + ": duplicate subject id '" + id + "'");
    }
  }
}

inline bool is_na(std::string_view s) { return s == "NA" || s == "na" || s == "." || s.empty(); }

inline double parse_real(const std::string& cell, const std::string& path, std::size_t line, std::size_t col) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) {
    throw InputError(path + ": line " + std::to_string(line) + ", column " + std::to_string(col) +
                     ": invalid number '" + cell + "'");
  }
  return v;
}

}  // namespace detail

/// Header: an id column label followed by variant ids. Rows: subject id then
/// genotype codes 0, 1, 2 or NA.
inline GenotypeMatrix parse_genotype_tsv(std::string_view text, const std::string& path = "genotypes") {
  const auto t = detail::parse_tsv(text, path);
  if (t.header.size() < 2) throw InputError(path + ": header needs an id column and at least one variant");
  if (t.rows.size() < 2) throw InputError(path + ": at least 2 subject rows are required");
  detail::check_unique_ids(t, path);
  const std::size_t m = t.header.size() - 1;
  std::vector<std::int8_t> codes;
  codes.reserve(t.rows.size() * m);
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ids.push_back(t.rows[r][0]);
    for (std::size_t c = 1; c <= m; ++c) {
      const auto& cell = t.rows[r][c];
      if (cell == "0" || cell == "1" || cell == "2") {
        codes.push_back(static_cast<std::int8_t>(cell[0] - '0'));
      } else if (detail::is_na(cell)) {
        codes.push_back(GenotypeMatrix::kMissing);
      } else {
        throw InputError(path + ": line " + std::to_string(t.line_of_row[r]) + ", column " + std::to_string(c + 1) +
                         ": invalid genotype '" + cell + "' (expected 0, 1, 2 or NA)");
      }
    }
  }
  std::vector<std::string> variants(t.header.begin() + 1, t.header.end());
  return {t.rows.size(), m, std::move(codes), std::move(ids), std::move(variants)};
}

inline GenotypeMatrix read_genotype_tsv(const std::string& path) { return parse_genotype_tsv(read_file(path), path); }

inline std::string format_genotype_tsv(const GenotypeMatrix& g) {
  std::string out = "id";
  for (const auto& v : g.variant_ids()) out += "\t" + v;
  out += "\n";
  for (std::size_t i = 0; i < g.subjects(); ++i) {
    out += g.subject_ids()[i];
    for (std::size_t m = 0; m < g.variants(); ++m) {
      out += '\t';
      if (g.missing(i, m)) out += "NA";
      else out += static_cast<char>('0' + g.at(i, m));
    }
    out += '\n';
  }
  return out;
}

inline void write_genotype_tsv(const GenotypeMatrix& g, const std::string& path) {
  write_atomic(path, format_genotype_tsv(g));
}

/// Phenotype columns plus any cov_-prefixed covariates, keyed by subject id.
struct PhenotypeFile {
  PhenotypeTable table;
  Eigen::MatrixXd covariates;  // n x c, no intercept
  std::vector<std::string> covariate_names;
};

/// Header: id column, then `name:binary` / `name:continuous` phenotype columns
/// and optional `cov_*` covariate columns. Missing values are rejected.
inline PhenotypeFile parse_phenotype_tsv(std::string_view text, const std::string& path = "phenotypes") {
  const auto t = detail::parse_tsv(text, path);
  if (t.rows.size() < 2) throw InputError(path + ": at least 2 subject rows are required");
  detail::check_unique_ids(t, path);
  std::vector<std::size_t> pheno_cols, cov_cols;
  std::vector<PhenotypeKind> kinds;
  std::vector<std::string> names, cov_names;
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    const auto& h = t.header[c];
    if (h.rfind("cov_", 0) == 0) {
      cov_cols.push_back(c);
      cov_names.push_back(h);
      continue;
    }
    const auto colon = h.rfind(':');
    const auto kind = colon == std::string::npos ? std::string() : h.substr(colon + 1);
    if (kind != "binary" && kind != "continuous") {
      throw InputError(path + ": line 1, column " + std::to_string(c + 1) + ": phenotype header '" + h +
                       "' must end in :binary or :continuous (or start with cov_ for a covariate)");
    }
    pheno_cols.push_back(c);
    kinds.push_back(kind == "binary" ? PhenotypeKind::binary : PhenotypeKind::continuous);
    names.push_back(h.substr(0, colon));
  }
  if (pheno_cols.empty()) throw InputError(path + ": no phenotype columns found");

  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Eigen::MatrixXd y(n, static_cast<Eigen::Index>(pheno_cols.size()));
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cov_cols.size()));
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ids.push_back(t.rows[r][0]);
    const auto line = t.line_of_row[r];
    const auto read = [&](std::size_t c) {
      const auto& cell = t.rows[r][c];
      if (detail::is_na(cell)) {
        throw InputError(path + ": line " + std::to_string(line) + ", column " + std::to_string(c + 1) +
                         ": missing value in '" + t.header[c] + "' (missing phenotypes are not imputed)");
      }
      return detail::parse_real(cell, path, line, c + 1);
    };
    for (std::size_t k = 0; k < pheno_cols.size(); ++k) {
      const double v = read(pheno_cols[k]);
      if (kinds[k] == PhenotypeKind::binary && v != 0.0 && v != 1.0) {
        throw InputError(path + ": line " + std::to_string(line) + ", column " + std::to_string(pheno_cols[k] + 1) +
                         ": binary phenotype value '" + t.rows[r][pheno_cols[k]] + "' is not 0 or 1");
      }
      y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
    }
    for (std::size_t k = 0; k < cov_cols.size(); ++k) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = read(cov_cols[k]);
    }
  }
  return {PhenotypeTable(std::move(y), std::move(kinds), {}, std::move(names), std::move(ids)), std::move(x),
          std::move(cov_names)};
}

inline PhenotypeFile read_phenotype_tsv(const std::string& path) { return parse_phenotype_tsv(read_file(path), path); }

inline std::string format_phenotype_tsv(const PhenotypeTable& y) {
  std::string out = "id";
  for (std::size_t c = 0; c < y.columns(); ++c) out += "\t" + y.names()[c] + ":" + to_string(y.kinds()[c]);
  out += "\n";
  for (std::size_t i = 0; i < y.subjects(); ++i) {
    out += y.subject_ids()[i];
    for (std::size_t c = 0; c < y.columns(); ++c) {
      out += '\t';
      out += format_double(y.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
    out += '\n';
  }
  return out;
}

inline void write_phenotype_tsv(const PhenotypeTable& y, const std::string& path) {
  write_atomic(path, format_phenotype_tsv(y));
}

struct AlignedData {
  GenotypeMatrix genotypes;
  PhenotypeFile phenotypes;
  std::size_t dropped_genotype_only = 0;
  std::size_t dropped_phenotype_only = 0;
};

/// Restricts both inputs to the subjects present in both, in genotype-file order.
inline AlignedData align_subjects(const GenotypeMatrix& g, const PhenotypeFile& p) {
  std::unordered_map<std::string, std::size_t> pheno_row;
  const auto& pid = p.table.subject_ids();
  for (std::size_t i = 0; i < pid.size(); ++i) pheno_row.emplace(pid[i], i);
  std::vector<std::size_t> g_rows, p_rows;
  for (std::size_t i = 0; i < g.subjects(); ++i) {
    const auto it = pheno_row.find(g.subject_ids()[i]);
    if (it == pheno_row.end()) continue;
    g_rows.push_back(i);
    p_rows.push_back(it->second);
  }
  if (g_rows.empty()) throw InputError("genotype and phenotype files share no subject ids");
  if (g_rows.size() < 2) throw InputError("only one subject id is shared by the genotype and phenotype files");
  AlignedData a{g.select_subjects(g_rows), {p.table.select_subjects(p_rows), {}, p.covariate_names},
                g.subjects() - g_rows.size(), p.table.subjects() - p_rows.size()};
  a.phenotypes.covariates.resize(static_cast<Eigen::Index>(p_rows.size()), p.covariates.cols());
  for (std::size_t k = 0; k < p_rows.size(); ++k) {
    a.phenotypes.covariates.row(static_cast<Eigen::Index>(k)) = p.covariates.row(static_cast<Eigen::Index>(p_rows[k]));
  }
  return a;
}

}  // namespace gsu::io
