#pragma once

#include <string>
#include <vector>

#include "cargoflow/frap.hpp"
#include "cargoflow/geometry.hpp"
#include "cargoflow/model.hpp"
#include "cargoflow/renewal.hpp"
#include "cargoflow/spatial.hpp"

namespace cargoflow {
namespace io {

/// All emitted files are versioned: CSV files start with
/// "# cargoflow-csv-v1 <kind>" and field dumps with "# cargoflow-field-v1".
/// Numbers are written with round-trip precision so seeded re-runs are
/// byte-identical.
std::string format_double(double v);

/// Model file (TOML subset): [[states]] entries with label/speed/diffusivity
/// and optional bound flag, [[rates]] entries with from/to (label or index)
/// and rate. Diagonal entries are derived; duplicate (from, to) pairs are
/// rejected. The parsed model is validated before being returned.
ModelSpec load_model(const std::string& path);
ModelSpec parse_model(const std::string& text, const std::string& origin);

/// FRAP protocol file (TOML subset): [spot], [postbleach], [observe],
/// [domain] tables; see the repo format documentation.
FrapProtocol load_protocol(const std::string& path);
FrapProtocol parse_protocol(const std::string& text, const std::string& origin);

RhoProfile load_rho_profile(const std::string& path);

std::vector<FilamentSegment> read_segments_csv(const std::string& path);
void write_segments_csv(const std::string& path,
                        const std::vector<FilamentSegment>& segments);

/// Plain-text field dump: version line, "nx ny dx dy x0 y0" header, then ny
/// rows of nx values.
void write_field(const std::string& path, const GridSpec& grid,
                 const std::vector<double>& values);
std::pair<GridSpec, std::vector<double>> read_field(const std::string& path);

RecoveryCurve read_recovery_csv(const std::string& path);
void write_recovery_csv(const std::string& path, const RecoveryCurve& curve);

void write_cycles_csv(const std::string& path,
                      const std::vector<CycleSample>& cycles);

/// Generic numeric table with named columns (dispersion tables, moment
/// series, sweep tables).
void write_table_csv(const std::string& path, const std::string& kind,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);

}  // namespace io
}  // namespace cargoflow
