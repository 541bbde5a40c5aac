#include "ustat/json_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ustat/common.hpp"

namespace ustat {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ApplicabilityError(path + ": " + what);
}

const ordered_json& field(const ordered_json& j, const char* name, const std::string& path) {
    auto it = j.find(name);
    if (it == j.end()) fail(path, std::string("missing field '") + name + "'");
    return *it;
}

int int_field(const ordered_json& j, const char* name, const std::string& path) {
    const auto& v = field(j, name, path);
    if (!v.is_number_integer()) fail(path + "." + name, "expected an integer");
    return v.get<int>();
}

std::vector<double> number_array(const ordered_json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) fail(path, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

DiscreteDistribution parse_law(const ordered_json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object with atoms and probs");
    auto atoms = number_array(field(j, "atoms", path), path + ".atoms");
    auto probs = number_array(field(j, "probs", path), path + ".probs");
    try {
        return make_distribution(atoms, probs);
    } catch (const std::exception& e) {
        fail(path + ".probs", e.what());
    }
}

std::string tuple_str(const std::vector<int>& idx) {
    std::string s = "(";
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (j) s += ",";
        s += std::to_string(idx[j] + 1);
    }
    return s + ")";
}

/// Flatten a nested-array table of the given shape, checking every level.
void parse_table(const ordered_json& j, const std::vector<std::size_t>& shape,
                 std::size_t depth, std::vector<double>& out, const std::string& path) {
    if (depth == shape.size()) {
        if (!j.is_number()) fail(path, "expected a number");
        out.push_back(j.get<double>());
        return;
    }
    if (!j.is_array() || j.size() != shape[depth])
        fail(path, "expected an array of length " + std::to_string(shape[depth]));
    for (std::size_t a = 0; a < j.size(); ++a)
        parse_table(j[a], shape, depth + 1, out, path + "[" + std::to_string(a) + "]");
}

ordered_json table_json(const std::vector<double>& flat, const std::vector<std::size_t>& shape,
                        std::size_t depth, std::size_t& pos) {
    if (depth == shape.size()) return flat[pos++];
    ordered_json arr = ordered_json::array();
    for (std::size_t a = 0; a < shape[depth]; ++a)
        arr.push_back(table_json(flat, shape, depth + 1, pos));
    return arr;
}

} // namespace

UStatInstance parse_instance_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ApplicabilityError(std::string("instance file: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ApplicabilityError("instance file: top level must be an object");
    for (const auto& [key, _] : j.items()) {
        static const char* known[] = {"id", "m", "n", "mode", "flags", "variables", "kernels"};
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ApplicabilityError("instance file: unknown field '" + key + "'");
    }

    UStatInstance inst;
    int m = int_field(j, "m", "instance");
    int n = int_field(j, "n", "instance");
    if (m < 1) fail("instance.m", "must be >= 1");
    if (n < 1) fail("instance.n", "must be >= 1");

    const auto& mode = field(j, "mode", "instance");
    if (!mode.is_string()) fail("instance.mode", "expected a string");
    if (mode == "decoupled")
        inst.mode = Mode::Decoupled;
    else if (mode == "undecoupled")
        inst.mode = Mode::Undecoupled;
    else
        fail("instance.mode", "expected \"decoupled\" or \"undecoupled\"");

    if (auto it = j.find("id"); it != j.end()) {
        if (!it->is_string()) fail("instance.id", "expected a string");
        inst.id = it->get<std::string>();
    }
    if (auto it = j.find("flags"); it != j.end()) {
        if (!it->is_object()) fail("instance.flags", "expected an object");
        for (const auto& [key, val] : it->items()) {
            if (!val.is_boolean()) fail("instance.flags." + key, "expected a boolean");
            if (key == "nonnegative")
                inst.flags.nonnegative = val.get<bool>();
            else if (key == "canonical")
                inst.flags.canonical = val.get<bool>();
            else if (key == "separately_symmetric")
                inst.flags.separately_symmetric = val.get<bool>();
            else
                fail("instance.flags", "unknown flag '" + key + "'");
        }
    }

    const auto& vars = field(j, "variables", "instance");
    const int rows = inst.mode == Mode::Decoupled ? m : 1;
    if (!vars.is_array() || static_cast<int>(vars.size()) != rows)
        fail("instance.variables", "expected " + std::to_string(rows) + " coordinate rows");
    inst.grid.m = m;
    inst.grid.n = n;
    inst.grid.laws.resize(rows);
    for (int r = 0; r < rows; ++r) {
        const auto& row = vars[r];
        std::string rpath = "variables[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            fail("instance." + rpath, "expected " + std::to_string(n) + " laws");
        for (int i = 0; i < n; ++i)
            inst.grid.laws[r].push_back(
                parse_law(row[i], rpath + "[" + std::to_string(i) + "]"));
    }

    const auto& kernels = field(j, "kernels", "instance");
    if (!kernels.is_array()) fail("instance.kernels", "expected an array");
    inst.kernel.m = m;
    inst.kernel.n = n;
    std::size_t total = 1;
    for (int jx = 0; jx < m; ++jx) total *= static_cast<std::size_t>(n);
    inst.kernel.tables.assign(total, {});
    std::vector<bool> seen(total, false);
    for (std::size_t k = 0; k < kernels.size(); ++k) {
        std::string kpath = "kernels[" + std::to_string(k) + "]";
        const auto& entry = kernels[k];
        if (!entry.is_object()) fail("instance." + kpath, "expected an object");
        const auto& idx_j = field(entry, "index", "instance." + kpath);
        if (!idx_j.is_array() || static_cast<int>(idx_j.size()) != m)
            fail("instance." + kpath + ".index", "expected " + std::to_string(m) + " entries");
        std::vector<int> idx;
        for (const auto& v : idx_j) {
            if (!v.is_number_integer()) fail("instance." + kpath + ".index", "expected integers");
            int one_based = v.get<int>();
            if (one_based < 1 || one_based > n)
                fail("instance." + kpath + ".index",
                     "entries must lie in [1, " + std::to_string(n) + "]");
            idx.push_back(one_based - 1);
        }
        std::size_t flat = flatten_index(idx, n);
        if (seen[flat])
            fail("instance." + kpath, "kernel index " + tuple_str(idx) + " given twice");
        seen[flat] = true;
        auto shape = table_shape(inst, idx);
        std::vector<double> flat_table;
        flat_table.reserve(table_size(shape));
        parse_table(field(entry, "table", "instance." + kpath), shape, 0, flat_table,
                    "instance." + kpath + ".table");
        inst.kernel.tables[flat] = std::move(flat_table);
    }
    for (std::size_t flat = 0; flat < total; ++flat) {
        if (!seen[flat]) {
            std::vector<int> missing = unflatten_index(flat, m, n);
            throw ApplicabilityError("instance.kernels: kernel index " + tuple_str(missing) +
                                     " absent");
        }
    }

    auto violations = validate_instance(inst);
    if (!violations.empty()) {
        std::string msg = "instance invariants violated:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw ApplicabilityError(msg);
    }
    return inst;
}

UStatInstance parse_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ApplicabilityError("cannot open instance file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance_json(buf.str());
}

std::string serialize_instance(const UStatInstance& inst) {
    ordered_json j;
    j["id"] = inst.id;
    j["m"] = inst.m();
    j["n"] = inst.n();
    j["mode"] = inst.mode == Mode::Decoupled ? "decoupled" : "undecoupled";
    j["flags"] = {{"nonnegative", inst.flags.nonnegative},
                  {"canonical", inst.flags.canonical},
                  {"separately_symmetric", inst.flags.separately_symmetric}};
    ordered_json vars = ordered_json::array();
    for (const auto& row : inst.grid.laws) {
        ordered_json jrow = ordered_json::array();
        for (const auto& law : row)
            jrow.push_back({{"atoms", law.atoms}, {"probs", law.probs}});
        vars.push_back(jrow);
    }
    j["variables"] = vars;
    ordered_json kernels = ordered_json::array();
    const int m = inst.m(), n = inst.n();
    std::size_t total = inst.kernel.tables.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::vector<int> idx = unflatten_index(flat, m, n);
        ordered_json entry;
        ordered_json idx_j = ordered_json::array();
        for (int v : idx) idx_j.push_back(v + 1);
        entry["index"] = idx_j;
        std::size_t pos = 0;
        entry["table"] = table_json(inst.kernel.table(flat), table_shape(inst, idx), 0, pos);
        kernels.push_back(entry);
    }
    j["kernels"] = kernels;
    return j.dump(2) + "\n";
}

void write_instance_file(const UStatInstance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ApplicabilityError("cannot write instance file '" + path + "'");
    out << serialize_instance(inst);
}

} // namespace ustat
