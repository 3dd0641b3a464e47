#pragma once

#include <stdexcept>
#include <string>

#include "rareis/solver.hpp"

namespace rareis::soc {

inline constexpr const char* kSolverVersion = "1.0.0";

class TableIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadedTables {
    ValueTable values;
    ControlTable controls;
    ProblemSpec problem;
};

// .soctab archive: magic "SOCTAB01", a length-prefixed JSON metadata header
// (dimensions, mode, partition, stage map, grid provenance, distribution and
// functional parameters, solver version), then grid/u/mu as little-endian
// binary64 arrays followed by an FNV-1a checksum of the array bytes.
// Custom functionals have no parameter form and cannot be archived.
void save_tables(const ValueTable& vt, const ControlTable& ct, const ProblemSpec& p,
                 const std::string& path);

LoadedTables load_tables(const std::string& path);

}  // namespace rareis::soc
