#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bspcop/copula.hpp"
#include "bspcop/em.hpp"
#include "bspcop/matrix.hpp"
#include "bspcop/select.hpp"

namespace bspcop {

using json = nlohmann::ordered_json;

/// {degrees, counts, interior_knot_counts, entries, targets}; entries row-major.
json model_to_json(const CopulaModel& model);
/// Throws Error(parse_error) for missing fields, inconsistent shapes, or targets that
/// disagree with the bases' weights by more than 1e-12.
CopulaModel model_from_json(const json& j);

json fit_report_to_json(const FitReport& rep);
json selection_to_json(const SelectionReport& rep);

/// One row per cell and fold: m,n[,k],alpha,beta,fold,score,converged. Fold "all"
/// carries the cell total; AIC cells use fold "aic".
void write_selection_csv(std::ostream& os, const SelectionReport& rep);

/// Doubles formatted with 17 significant digits, so reading them back is lossless.
std::string format_double(double x);

void write_csv(std::ostream& os, const std::vector<std::string>& header, const Matrix& m);

/// Numeric CSV with a header row. `columns` picks columns by header name or by
/// 0-based index; empty means all columns. Errors carry the 1-based line number.
Matrix read_csv(std::istream& is, const std::vector<std::string>& columns = {});
Matrix read_csv_file(const std::string& path, const std::vector<std::string>& columns = {});

/// Flat "key = value" text; '#' starts a comment. Throws Error(parse_error) with a
/// line number on malformed lines or repeated keys.
std::map<std::string, std::string> read_config(std::istream& is);
std::map<std::string, std::string> read_config_file(const std::string& path);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace bspcop
