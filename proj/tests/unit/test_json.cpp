#include "doctest.h"

#include <string>

#include "json.hpp"
#include "ustat/common.hpp"
#include "ustat/exact.hpp"
#include "ustat/generate.hpp"
#include "ustat/json_io.hpp"

using namespace ustat;

namespace {

bool same_instance(const UStatInstance& a, const UStatInstance& b) {
    if (a.id != b.id || a.mode != b.mode || a.m() != b.m() || a.n() != b.n()) return false;
    if (a.grid.laws.size() != b.grid.laws.size()) return false;
    for (std::size_t j = 0; j < a.grid.laws.size(); ++j) {
        if (a.grid.laws[j].size() != b.grid.laws[j].size()) return false;
        for (std::size_t i = 0; i < a.grid.laws[j].size(); ++i) {
            const auto& x = a.grid.laws[j][i];
            const auto& y = b.grid.laws[j][i];
            if (x.atoms != y.atoms || x.probs != y.probs) return false;
        }
    }
    if (a.kernel.tables != b.kernel.tables) return false;
    return a.flags.nonnegative == b.flags.nonnegative &&
           a.flags.canonical == b.flags.canonical &&
           a.flags.separately_symmetric == b.flags.separately_symmetric;
}

} // namespace

TEST_CASE("serialized instances round-trip value for value") {
    for (const char* family : {"nonneg", "canonical", "symmetric-undecoupled"}) {
        auto inst = generate_instance(family, 2, 2, 3, 13);
        std::string text = serialize_instance(inst);
        auto back = parse_instance_json(text);
        CHECK(same_instance(inst, back));
        // a second serialize of the parsed instance is byte-identical
        CHECK(serialize_instance(back) == text);
    }
    auto m1 = generate_instance("nonneg", 1, 4, 2, 14);
    CHECK(same_instance(m1, parse_instance_json(serialize_instance(m1))));
}

TEST_CASE("file round trip through disk") {
    auto inst = generate_instance("canonical", 2, 2, 2, 15);
    const std::string path = "/tmp/ustat_roundtrip.json";
    write_instance_file(inst, path);
    auto back = parse_instance_file(path);
    CHECK(same_instance(inst, back));
    CHECK_THROWS_WITH_AS(parse_instance_file("/tmp/definitely_missing_ustat.json"),
                         doctest::Contains("cannot open"), ApplicabilityError);
}

TEST_CASE("bad probability vectors are reported with their field path") {
    auto inst = generate_instance("nonneg", 1, 2, 2, 16);
    auto j = nlohmann::ordered_json::parse(serialize_instance(inst));
    j["variables"][0][1]["probs"] = {0.45, 0.45}; // sums to 0.9
    CHECK_THROWS_WITH_AS(parse_instance_json(j.dump()),
                         doctest::Contains("variables[0][1].probs"), ApplicabilityError);
}

TEST_CASE("a missing kernel index is named in the error") {
    auto inst = generate_instance("nonneg", 2, 2, 2, 17);
    auto j = nlohmann::ordered_json::parse(serialize_instance(inst));
    auto& kernels = j["kernels"];
    // drop the entry whose 1-based index is (2,1)
    for (std::size_t k = 0; k < kernels.size(); ++k) {
        if (kernels[k]["index"] == nlohmann::ordered_json::array({2, 1})) {
            kernels.erase(k);
            break;
        }
    }
    CHECK_THROWS_WITH_AS(parse_instance_json(j.dump()),
                         doctest::Contains("kernel index (2,1) absent"), ApplicabilityError);
}

TEST_CASE("schema violations carry a path and invariants are surfaced") {
    auto inst = generate_instance("nonneg", 2, 2, 2, 18);
    auto base = nlohmann::ordered_json::parse(serialize_instance(inst));

    auto bad_mode = base;
    bad_mode["mode"] = "sideways";
    CHECK_THROWS_WITH_AS(parse_instance_json(bad_mode.dump()), doctest::Contains("mode"),
                         ApplicabilityError);

    auto extra = base;
    extra["surprise"] = 1;
    CHECK_THROWS_WITH_AS(parse_instance_json(extra.dump()),
                         doctest::Contains("unknown field 'surprise'"), ApplicabilityError);

    auto dup = base;
    dup["kernels"].push_back(dup["kernels"][0]);
    CHECK_THROWS_WITH_AS(parse_instance_json(dup.dump()), doctest::Contains("given twice"),
                         ApplicabilityError);

    auto short_table = base;
    short_table["kernels"][0]["table"][0].erase(0);
    CHECK_THROWS_WITH_AS(parse_instance_json(short_table.dump()),
                         doctest::Contains("kernels[0].table"), ApplicabilityError);

    // declared flag contradicted by the data -> invariant list surfaced
    auto lying = base;
    lying["flags"]["canonical"] = true;
    CHECK_THROWS_WITH_AS(parse_instance_json(lying.dump()),
                         doctest::Contains("invariants violated"), ApplicabilityError);

    CHECK_THROWS_WITH_AS(parse_instance_json("not json at all"),
                         doctest::Contains("invalid JSON"), ApplicabilityError);
}

TEST_CASE("parsed instances drive the exact engine like generated ones") {
    auto inst = generate_instance("nonneg", 2, 2, 2, 19);
    auto back = parse_instance_json(serialize_instance(inst));
    auto a = exact_distribution(inst, {});
    auto b = exact_distribution(back, {});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.values[i] == b.values[i]);
        CHECK(a.probs[i] == b.probs[i]);
    }
}
