#include "vpon/dba_standard.hpp"

#include "oracles.hpp"
#include "vpon/codec.hpp"

#include <catch2/catch.hpp>

#include <random>

using namespace vpon;

namespace {

AllocTable one_best_effort() {
    AllocTable t;
    t.add(AllocId{3}, 1, TcontClass::BestEffort);
    return t;
}

// Grant size for an id in a map; zero when absent.
std::uint64_t grant_of(const Bwmap& map, AllocId id) {
    std::uint64_t total = 0;
    for (const auto& a : map.allocations) {
        if (a.alloc_id == id) total += a.grant_size_bytes;
    }
    return total;
}

} // namespace

TEST_CASE("ingest applies absolute occupancy") {
    const AllocTable table = one_best_effort();
    DemandLedger ledger;

    ledger.ingest(Dbru{AllocId{3}, 500, false}, 1, table);
    CHECK(ledger.demand(AllocId{3}) == 500);

    ledger.ingest(Dbru{AllocId{3}, 200, false}, 2, table);
    CHECK(ledger.demand(AllocId{3}) == 200);

    SECTION("unregistered ids are rejected") {
        bool caught = false;
        try {
            ledger.ingest(Dbru{AllocId{999}, 10, false}, 3, table);
        } catch (const Error& e) {
            caught = true;
            CHECK(e.code() == Errc::UnknownAllocId);
        }
        CHECK(caught);
    }
}

TEST_CASE("debit floors at zero") {
    const AllocTable table = one_best_effort();
    DemandLedger ledger;
    ledger.ingest(Dbru{AllocId{3}, 100, false}, 0, table);
    ledger.debit(AllocId{3}, 30);
    CHECK(ledger.demand(AllocId{3}) == 70);
    ledger.debit(AllocId{3}, 1000);
    CHECK(ledger.demand(AllocId{3}) == 0);
}

TEST_CASE("no demand yields the reserve plus one polling grant") {
    const AllocTable table = one_best_effort();
    DemandLedger ledger;
    DbaConfig cfg;
    cfg.reserved_fraction = 0.2;

    const Bwmap map = compute_bwmap(ledger, cfg, table, 0);
    const auto reserve = std::uint32_t(0.2 * cfg.frame_capacity_bytes);
    CHECK(map.reserved_window == ReservedWindow{0, reserve});
    REQUIRE(map.allocations.size() == 1);
    const Allocation& a = map.allocations[0];
    CHECK(a.alloc_id == AllocId{3});
    CHECK(a.grant_size_bytes == kMinGrantBytes);
    CHECK(a.dbru_requested);
    CHECK(a.start_time_bytes >= reserve);
    CHECK(a.origin == Origin::StandardDba);
}

TEST_CASE("ample capacity satisfies demand exactly") {
    AllocTable table;
    table.add(AllocId{1}, 1, TcontClass::Assured);
    table.add(AllocId{2}, 1, TcontClass::Assured);
    DemandLedger ledger;
    ledger.ingest(Dbru{AllocId{1}, 1000, false}, 0, table);
    ledger.ingest(Dbru{AllocId{2}, 3000, false}, 0, table);

    DbaConfig cfg;
    const Bwmap map = compute_bwmap(ledger, cfg, table, 0);
    CHECK(grant_of(map, AllocId{1}) == 1000);
    CHECK(grant_of(map, AllocId{2}) == 3000);
    CHECK(ledger.demand(AllocId{1}) == 0);
    CHECK(ledger.demand(AllocId{2}) == 0);
}

TEST_CASE("standard grants never enter the reserved window") {
    std::mt19937_64 rng(7);
    AllocTable table;
    for (std::uint16_t i = 0; i < 6; ++i) {
        table.add(AllocId{std::uint16_t(10 + i)}, 1,
                  i % 2 ? TcontClass::Assured : TcontClass::BestEffort);
    }
    for (int iter = 0; iter < 200; ++iter) {
        DemandLedger ledger;
        for (const auto& [id, info] : table.entries()) {
            ledger.ingest(Dbru{id, std::uint32_t(rng() % 100000), false}, 0, table);
        }
        DbaConfig cfg;
        cfg.reserved_fraction = double(rng() % 40) / 100.0;
        const Bwmap map = compute_bwmap(ledger, cfg, table, std::uint32_t(iter));
        for (const auto& a : map.allocations) {
            CHECK(a.origin == Origin::StandardDba);
            CHECK(a.start_time_bytes >= map.reserved_window.length_bytes);
        }
    }
}

TEST_CASE("work conservation outside the reserve") {
    AllocTable table;
    for (std::uint16_t i = 0; i < 16; ++i) {
        table.add(AllocId{std::uint16_t(10 + i)}, 1,
                  i % 2 ? TcontClass::Assured : TcontClass::BestEffort);
    }
    std::mt19937_64 rng(19);
    for (int iter = 0; iter < 100; ++iter) {
        DemandLedger ledger;
        for (const auto& [id, info] : table.entries()) {
            ledger.ingest(Dbru{id, 20000 + std::uint32_t(rng() % 200000), false}, 0, table);
        }
        DbaConfig cfg;
        cfg.reserved_fraction = 0.1;
        const Bwmap map = compute_bwmap(ledger, cfg, table, 0);
        const std::uint64_t unallocated =
            (cfg.frame_capacity_bytes - map.reserved_window.length_bytes) -
            map.total_grant_bytes();
        CHECK(unallocated < kMinGrantBytes);
    }
}

TEST_CASE("deterministic byte-identical output") {
    AllocTable table;
    table.add(AllocId{4}, 1, TcontClass::Assured);
    table.add(AllocId{9}, 2, TcontClass::BestEffort);
    DemandLedger a, b;
    a.ingest(Dbru{AllocId{4}, 4096, false}, 3, table);
    b.ingest(Dbru{AllocId{4}, 4096, false}, 3, table);
    a.ingest(Dbru{AllocId{9}, 777777, false}, 3, table);
    b.ingest(Dbru{AllocId{9}, 777777, false}, 3, table);

    DbaConfig cfg;
    const Bytes ea = encode_bwmap(compute_bwmap(a, cfg, table, 5), cfg.frame_capacity_bytes);
    const Bytes eb = encode_bwmap(compute_bwmap(b, cfg, table, 5), cfg.frame_capacity_bytes);
    CHECK(ea == eb);
}

TEST_CASE("polling grants alone can exhaust capacity") {
    AllocTable table;
    for (std::uint16_t i = 0; i < 11; ++i) {
        table.add(AllocId{i}, 1, TcontClass::BestEffort);
    }
    DemandLedger ledger;
    DbaConfig cfg;
    cfg.frame_capacity_bytes = 80; // 11 polling grants need 88
    cfg.reserved_fraction = 0.0;
    bool caught = false;
    try {
        compute_bwmap(ledger, cfg, table, 0);
    } catch (const Error& e) {
        caught = true;
        CHECK(e.code() == Errc::CapacityExhausted);
    }
    CHECK(caught);
}

TEST_CASE("low-latency ids bypass standard data grants only when reserved") {
    AllocTable table;
    table.add(AllocId{1}, 1, TcontClass::LowLatency);
    table.add(AllocId{2}, 1, TcontClass::BestEffort);

    SECTION("with a reserve the LL id gets polling only") {
        DemandLedger ledger;
        ledger.ingest(Dbru{AllocId{1}, 5000, true}, 0, table);
        ledger.ingest(Dbru{AllocId{2}, 5000, false}, 0, table);
        DbaConfig cfg;
        cfg.reserved_fraction = 0.1;
        const Bwmap map = compute_bwmap(ledger, cfg, table, 0);
        CHECK(grant_of(map, AllocId{1}) == kMinGrantBytes);
        CHECK(grant_of(map, AllocId{2}) == 5000);
    }
    SECTION("with no reserve the LL id outranks everyone") {
        DemandLedger ledger;
        ledger.ingest(Dbru{AllocId{1}, 5000, true}, 0, table);
        ledger.ingest(Dbru{AllocId{2}, 5000, false}, 0, table);
        DbaConfig cfg;
        cfg.reserved_fraction = 0.0;
        cfg.frame_capacity_bytes = 4016; // 2 polling + 4000 data
        const Bwmap map = compute_bwmap(ledger, cfg, table, 0);
        CHECK(grant_of(map, AllocId{1}) == 4008); // polling + all data budget
        CHECK(grant_of(map, AllocId{2}) == kMinGrantBytes);
    }
}

TEST_CASE("service interval gates polling grants") {
    const AllocTable table = one_best_effort();
    DbaConfig cfg;
    cfg.service_interval_frames = 3;

    DemandLedger ledger;
    CHECK(compute_bwmap(ledger, cfg, table, 0).allocations.size() == 1);
    CHECK(compute_bwmap(ledger, cfg, table, 1).allocations.empty());
    CHECK(compute_bwmap(ledger, cfg, table, 2).allocations.empty());
    CHECK(compute_bwmap(ledger, cfg, table, 3).allocations.size() == 1);

    // Demand reported meanwhile is still served between polling frames.
    ledger.ingest(Dbru{AllocId{3}, 640, false}, 4, table);
    const Bwmap map = compute_bwmap(ledger, cfg, table, 4);
    CHECK(grant_of(map, AllocId{3}) == 640);
}

TEST_CASE("wrr matches the per-byte oracle") {
    std::mt19937_64 rng(23);
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<WrrEntry> entries;
        const std::size_t n = 1 + rng() % 8;
        std::uint16_t next_id = 1;
        for (std::size_t i = 0; i < n; ++i) {
            next_id = std::uint16_t(next_id + 1 + rng() % 5);
            entries.push_back(WrrEntry{AllocId{next_id}, rng() % 5000,
                                       std::uint32_t(1 + rng() % 4)});
        }
        const std::uint64_t capacity = rng() % 8000;
        CHECK(wrr_allocate(entries, capacity) == oracles::wrr_per_byte(entries, capacity));
    }
}

TEST_CASE("scheduler equals the oracle on exhaustive small demand grids") {
    // Demands over {0, 100, ..., 1000}, exhaustive for up to 3 ids.
    AllocTable table;
    table.add(AllocId{1}, 1, TcontClass::BestEffort);
    table.add(AllocId{2}, 1, TcontClass::BestEffort);
    table.add(AllocId{3}, 1, TcontClass::BestEffort);

    DbaConfig cfg;
    cfg.frame_capacity_bytes = 1224; // 3 polling grants + 1200 data
    cfg.reserved_fraction = 0.0;

    for (int d1 = 0; d1 <= 1000; d1 += 100) {
        for (int d2 = 0; d2 <= 1000; d2 += 100) {
            for (int d3 = 0; d3 <= 1000; d3 += 100) {
                DemandLedger ledger;
                const std::uint32_t demands[3] = {std::uint32_t(d1), std::uint32_t(d2),
                                                  std::uint32_t(d3)};
                std::vector<WrrEntry> oracle_in;
                for (int i = 0; i < 3; ++i) {
                    const AllocId id{std::uint16_t(i + 1)};
                    ledger.ingest(Dbru{id, demands[i], false}, 0, table);
                    const std::uint64_t residual =
                        demands[i] > kMinGrantBytes ? demands[i] - kMinGrantBytes : 0;
                    if (residual > 0) oracle_in.push_back(WrrEntry{id, residual, 1});
                }
                const auto oracle =
                    oracles::wrr_per_byte(oracle_in, 1224 - 3 * kMinGrantBytes);

                const Bwmap map = compute_bwmap(ledger, cfg, table, 0);
                std::size_t k = 0;
                for (int i = 0; i < 3; ++i) {
                    const AllocId id{std::uint16_t(i + 1)};
                    std::uint64_t expect = kMinGrantBytes;
                    if (k < oracle_in.size() && oracle_in[k].id == id) {
                        expect += oracle[k];
                        ++k;
                    }
                    REQUIRE(grant_of(map, id) == expect);
                }
            }
        }
    }
}
