#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tpk::harness {

using json = nlohmann::json;

struct Record {
    int id = 0;
    std::string name;
    std::string claim;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double runtime_s = 0.0;
    json details = json::object();
};

inline json to_json(const Record& r) {
    return {{"id", r.id},         {"name", r.name},   {"claim", r.claim},         {"measured", r.measured},
            {"tolerance", r.tolerance}, {"pass", r.pass}, {"runtime_s", r.runtime_s}, {"details", r.details}};
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct Report {
    json metadata = json::object();
    std::vector<Record> records;

    bool all_pass() const {
        for (const auto& r : records)
            if (!r.pass) return false;
        return true;
    }

    json to_json() const {
        json recs = json::array();
        for (const auto& r : records) recs.push_back(harness::to_json(r));
        return {{"metadata", metadata}, {"records", recs}};
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << "id,name,claim,measured,tolerance,pass,runtime_s\n";
        for (const auto& r : records)
            out << r.id << ',' << csv_field(r.name) << ',' << csv_field(r.claim) << ',' << fmt(r.measured) << ','
                << fmt(r.tolerance) << ',' << (r.pass ? "true" : "false") << ',' << fmt(r.runtime_s) << '\n';
        return out.str();
    }

    /// One line per record.
    std::string to_text() const {
        std::ostringstream out;
        for (const auto& r : records) {
            out << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": measured " << fmt(r.measured)
                << ", tolerance " << fmt(r.tolerance) << " (" << fmt(r.runtime_s) << " s) - " << r.claim << '\n';
        }
        return out.str();
    }
};

}  // namespace tpk::harness
