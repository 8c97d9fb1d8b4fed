#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>

#include "symspace/serialization.hpp"

namespace symspace {

/// One verification row. `ref` names the mathematical fact being checked;
/// `provenance` records where its expected value comes from:
///   exact       - an identity that must hold to roundoff,
///   closed-form - a hand-derivable number,
///   oracle      - an independent numerical route computed here,
///   measured    - a reported quantity with no asserted bound.
struct CheckRow {
  std::string id;
  std::string ref;
  std::string provenance;
  std::string inputs_digest;
  double measured = 0.0;
  double tolerance = 0.0;
  bool asserted = true;   // measured <= tolerance required when true
  bool pass = true;
  std::string note;
};

struct VerificationReport {
  int schema = 1;
  std::vector<CheckRow> rows;

  CheckRow& add(const std::string& id, const std::string& ref,
                const std::string& provenance, const std::string& inputs,
                double measured, double tolerance, bool asserted = true,
                const std::string& note = "") {
    CheckRow row;
    row.id = id;
    row.ref = ref;
    row.provenance = provenance;
    row.inputs_digest = hex_digest(inputs);
    row.measured = measured;
    row.tolerance = tolerance;
    row.asserted = asserted;
    row.pass = !asserted || measured <= tolerance;
    row.note = note;
    rows.push_back(row);
    return rows.back();
  }

  bool all_pass() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const CheckRow& r) { return r.pass; });
  }

  int failed_count() const {
    int n = 0;
    for (const auto& r : rows)
      if (!r.pass) ++n;
    return n;
  }

  /// max/median summary over rows whose id starts with the given prefix.
  json summary_for(const std::string& prefix) const {
    std::vector<double> vals;
    for (const auto& r : rows)
      if (r.id.rfind(prefix, 0) == 0) vals.push_back(r.measured);
    json s;
    s["count"] = vals.size();
    if (!vals.empty()) {
      std::sort(vals.begin(), vals.end());
      s["max"] = vals.back();
      s["median"] = vals[vals.size() / 2];
    }
    return s;
  }

  json to_json() const {
    json j;
    j["schema"] = schema;
    json rws = json::array();
    for (const auto& r : rows) {
      json row;
      row["id"] = r.id;
      row["ref"] = r.ref;
      row["provenance"] = r.provenance;
      row["inputs"] = r.inputs_digest;
      row["measured"] = r.measured;
      row["tolerance"] = r.tolerance;
      row["asserted"] = r.asserted;
      row["pass"] = r.pass;
      if (!r.note.empty()) row["note"] = r.note;
      rws.push_back(row);
    }
    j["rows"] = rws;
    json summary;
    for (const std::string& prefix : {"pairing.bb_ratio", "pairing.codim1", "split."})
      summary[prefix] = summary_for(prefix);
    summary["failed"] = failed_count();
    summary["pass"] = all_pass();
    j["summary"] = summary;
    return j;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "id,ref,provenance,inputs,measured,tolerance,asserted,pass,note\n";
    for (const auto& r : rows) {
      os << r.id << ',' << r.ref << ',' << r.provenance << ',' << r.inputs_digest << ','
         << std::scientific << r.measured << ',' << r.tolerance << ','
         << (r.asserted ? 1 : 0) << ',' << (r.pass ? 1 : 0) << ',' << r.note << '\n';
    }
    return os.str();
  }

  void write(const std::string& dir, const std::string& format) const {
    if (format == "json" || format == "both") {
      std::ofstream out(dir + "/report.json");
      out << to_json().dump(2) << '\n';
    }
    if (format == "csv" || format == "both") {
      std::ofstream out(dir + "/report.csv");
      out << to_csv();
    }
  }
};

}  // namespace symspace
