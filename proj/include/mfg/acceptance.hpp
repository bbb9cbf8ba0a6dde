#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfg {

struct CriterionResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;   // worst observed quantity, criterion specific
    double threshold = 0.0;  // bound the measurement must respect
    double seconds = 0.0;
    std::string detail;      // secondary measurements, one line
};

// Runs the ten acceptance checks in order, streaming one PASS/FAIL line per
// criterion to `log`. A missed bound never throws; infrastructure errors are
// caught and reported as a failed criterion with the message in detail.
std::vector<CriterionResult> run_acceptance_battery(std::ostream& log);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace mfg
