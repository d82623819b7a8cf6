#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "jurysim/engine.hpp"
#include "jurysim/metrics.hpp"
#include "test_support.hpp"

using namespace jurysim;
using namespace jurysim::test;

namespace {

JurorId J(int i) { return JurorId::from_index(i); }

// Independent rank-correlation oracle: Pearson correlation of the two rank
// vectors, exact integer accumulators, one final division. Deliberately a
// different route than the production d^2 formula.
double pearson_rank_oracle(const std::vector<int>& x, const std::vector<int>& y) {
    const long long n = static_cast<long long>(x.size());
    long long sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long long>(x[i]) * x[i];
        syy += static_cast<long long>(y[i]) * y[i];
        sxy += static_cast<long long>(x[i]) * y[i];
    }
    const long long num = n * sxy - sx * sy;
    const long long den_x = n * sxx - sx * sx;
    const long long den_y = n * syy - sy * sy;
    REQUIRE(den_x == den_y); // distinct ranks on both sides
    return static_cast<double>(num) / static_cast<double>(den_x);
}

double oracle_rho(const std::vector<JurorId>& observed, const std::vector<JurorId>& canonical) {
    std::vector<int> obs_rank, canon_rank;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        auto it = std::find(canonical.begin(), canonical.end(), observed[i]);
        REQUIRE(it != canonical.end());
        obs_rank.push_back(static_cast<int>(i));
        canon_rank.push_back(static_cast<int>(it - canonical.begin()));
    }
    return pearson_rank_oracle(obs_rank, canon_rank);
}

} // namespace

TEST_CASE("extract_vote_changes: rigid record is empty, single diff is found") {
    auto rigid = make_record(36,
                             {round_at(12, Vote::Guilty, {8}), round_at(24, Vote::Guilty, {8}),
                              round_at(36, Vote::Guilty, {8})},
                             Verdict::HungJury, "early_stop");
    CHECK(extract_vote_changes(rigid).empty());

    auto flip = make_record(24, {round_at(12, Vote::Guilty, {8}), round_at(24, Vote::Guilty, {8, 9})},
                            Verdict::HungJury, "early_stop");
    auto changes = extract_vote_changes(flip);
    REQUIRE(changes.size() == 1);
    CHECK(changes[0] == VoteChangeEvent{24, J(9), Vote::Guilty, Vote::NotGuilty});
}

TEST_CASE("extract_vote_changes: oscillation yields two events with matching turns") {
    auto record = make_record(36,
                              {round_at(12, Vote::Guilty, {8, 9}), round_at(24, Vote::Guilty, {8}),
                               round_at(36, Vote::Guilty, {8, 9})},
                              Verdict::HungJury, "early_stop");
    auto changes = extract_vote_changes(record);
    REQUIRE(changes.size() == 3);
    CHECK(changes[0] == VoteChangeEvent{12, J(9), Vote::Guilty, Vote::NotGuilty});
    CHECK(changes[1] == VoteChangeEvent{24, J(9), Vote::NotGuilty, Vote::Guilty});
    CHECK(changes[2] == VoteChangeEvent{36, J(9), Vote::Guilty, Vote::NotGuilty});
}

TEST_CASE("extract_vote_changes: no_initial_vote first round registers nothing") {
    auto record = make_record(24,
                              {round_at(12, Vote::Guilty, {4, 8}), round_at(24, Vote::Guilty, {8})},
                              Verdict::HungJury, "early_stop", Condition::NoInitialVote);
    auto changes = extract_vote_changes(record);
    REQUIRE(changes.size() == 1); // only Juror_4's flip back at turn 24
    CHECK(changes[0] == VoteChangeEvent{24, J(4), Vote::NotGuilty, Vote::Guilty});
}

TEST_CASE("extract_vote_changes matches the record's stored changes on real runs") {
    for (std::uint64_t seed : {3ULL, 8ULL, 21ULL}) {
        RunConfig config = scripted_config("flexible", Condition::Baseline, seed);
        RunResult result = run_deliberation(config, bundle().personas, bundle().case_file);
        REQUIRE(extract_vote_changes(result.record) == result.record.vote_changes);
    }
}

TEST_CASE("first_flip_order basics") {
    CHECK(first_flip_order({}).empty());

    std::vector<VoteChangeEvent> events = {{24, J(9), Vote::Guilty, Vote::NotGuilty},
                                           {36, J(5), Vote::Guilty, Vote::NotGuilty},
                                           {48, J(9), Vote::NotGuilty, Vote::Guilty}};
    auto order = first_flip_order(events);
    REQUIRE(order.size() == 2);
    CHECK(order[0] == J(9));
    CHECK(order[1] == J(5));
}

TEST_CASE("first_flip_order excludes NOT_GUILTY-initial jurors and breaks ties by id") {
    // Juror_8 starts NOT_GUILTY: its NG->G then G->NG never enter the order.
    std::vector<VoteChangeEvent> events = {{12, J(8), Vote::NotGuilty, Vote::Guilty},
                                           {24, J(3), Vote::Guilty, Vote::NotGuilty},
                                           {24, J(7), Vote::Guilty, Vote::NotGuilty},
                                           {36, J(8), Vote::Guilty, Vote::NotGuilty}};
    auto order = first_flip_order(events);
    REQUIRE(order.size() == 2);
    CHECK(order[0] == J(3)); // same turn, ascending juror id
    CHECK(order[1] == J(7));
}

TEST_CASE("first_flip_order is idempotent under appending non-flip events") {
    std::vector<VoteChangeEvent> events = {{12, J(2), Vote::Guilty, Vote::NotGuilty}};
    auto before = first_flip_order(events);
    events.push_back({24, J(2), Vote::NotGuilty, Vote::Guilty});
    events.push_back({36, J(2), Vote::Guilty, Vote::NotGuilty});
    CHECK(first_flip_order(events) == before);
}

TEST_CASE("spearman examples: prefix, reverse, derived 0.5") {
    auto canonical = default_canonical_flip_order();

    std::vector<JurorId> prefix(canonical.begin(), canonical.begin() + 3);
    auto r1 = spearman_rho(prefix, canonical, RhoUndefinedPolicy::Skip);
    REQUIRE(r1.rho);
    CHECK(*r1.rho == 1.0);

    std::vector<JurorId> reversed(prefix.rbegin(), prefix.rend());
    auto r2 = spearman_rho(reversed, canonical, RhoUndefinedPolicy::Skip);
    REQUIRE(r2.rho);
    CHECK(*r2.rho == -1.0);

    // observed [A,B,C] against canonical order [A,C,B]: sum d^2 = 2, n = 3
    std::vector<JurorId> abc = {J(9), J(5), J(11)};
    std::vector<JurorId> acb_canonical = {J(9), J(11), J(5)};
    auto r3 = spearman_rho(abc, acb_canonical, RhoUndefinedPolicy::Skip);
    REQUIRE(r3.rho);
    CHECK(*r3.rho == 0.5);
    CHECK(*r3.rho == oracle_rho(abc, acb_canonical));
}

TEST_CASE("spearman undefined-below-two policies") {
    auto canonical = default_canonical_flip_order();
    std::vector<JurorId> one = {J(9)};
    CHECK(!spearman_rho(one, canonical, RhoUndefinedPolicy::Skip).rho);
    CHECK(!spearman_rho({}, canonical, RhoUndefinedPolicy::Skip).rho);
    auto reported = spearman_rho(one, canonical, RhoUndefinedPolicy::ReportOne);
    REQUIRE(reported.rho);
    CHECK(*reported.rho == 1.0);
}

TEST_CASE("spearman restricts to the intersection and reports exclusions") {
    // canonical list missing Juror_4: an observed Juror_4 is excluded
    std::vector<JurorId> canonical = {J(9), J(5), J(11)};
    std::vector<JurorId> observed = {J(5), J(4), J(9)};
    auto r = spearman_rho(observed, canonical, RhoUndefinedPolicy::Skip);
    REQUIRE(r.rho);
    REQUIRE(r.excluded.size() == 1);
    CHECK(r.excluded.front() == J(4));
    // restricted lists: observed [5,9] vs canonical [9,5] -> perfect anti-rank
    CHECK(*r.rho == -1.0);
}

TEST_CASE("spearman equals the brute-force oracle on all permutations n=2..5") {
    auto canonical_full = default_canonical_flip_order();
    int cases = 0;
    for (int n = 2; n <= 5; ++n) {
        std::vector<JurorId> canonical(canonical_full.begin(), canonical_full.begin() + n);
        std::vector<JurorId> observed = canonical;
        std::sort(observed.begin(), observed.end());
        do {
            auto got = spearman_rho(observed, canonical, RhoUndefinedPolicy::Skip);
            REQUIRE(got.rho);
            REQUIRE(*got.rho == oracle_rho(observed, canonical)); // bit-exact
            ++cases;
        } while (std::next_permutation(observed.begin(), observed.end()));
    }
    CHECK(cases == 2 + 6 + 24 + 120);
}

TEST_CASE("cascade velocity is the exact quotient") {
    CHECK(cascade_velocity(0, 36) == 0.0);
    CHECK(cascade_velocity(6, 64) == 0.09375);
    CHECK(cascade_velocity(1, 44) == doctest::Approx(0.0227272727272727).epsilon(1e-15));
    CHECK(cascade_velocity(1, 44) == 1.0 / 44.0);
    CHECK_THROWS_AS(cascade_velocity(1, 0), std::domain_error);
}

TEST_CASE("evidence coverage via the shipped alias table") {
    auto base = make_record(12, {round_at(12, Vote::Guilty, {8})}, Verdict::HungJury, "early_stop");

    SUBCASE("only the switchblade is cited") {
        auto record = base;
        record.events[0] = Utterance{1, J(1), "All I keep thinking about is that switchblade."};
        for (int t = 2; t <= 12; ++t)
            record.events[t - 1] = Utterance{t, J((t - 1) % 12 + 1), "No comment."};
        auto cited = evidence_coverage(record, bundle().case_file, bundle().metric_config);
        CHECK(cited == std::set<int>{2});
    }
    SUBCASE("empty transcript cites nothing") {
        DeliberationRecord record;
        record.config = base.config;
        CHECK(evidence_coverage(record, bundle().case_file, bundle().metric_config).empty());
    }
    SUBCASE("concatenating all descriptions cites all eight") {
        auto record = base;
        std::string all;
        for (const auto& item : bundle().case_file.evidence) all += item.description + " ";
        record.events[0] = Utterance{1, J(1), all};
        auto cited = evidence_coverage(record, bundle().case_file, bundle().metric_config);
        CHECK(cited == std::set<int>{1, 2, 3, 4, 5, 6, 7, 8});
    }
}

TEST_CASE("key-argument coverage counts matched arguments per juror") {
    auto record = make_record(12, {round_at(12, Vote::Guilty, {8})}, Verdict::HungJury, "early_stop");

    // Juror_9 utters one of its two arguments verbatim
    record.events[0] = Utterance{
        1, J(9), "The woman witness constantly rubbed indentation marks on her nose from wearing "
                 "glasses; no glasses in bed."};
    auto coverage = key_argument_coverage(record, bundle().personas, bundle().metric_config);
    CHECK(coverage.at(J(9)) == doctest::Approx(0.5));

    // a juror with no utterances scores zero
    DeliberationRecord empty;
    empty.config = record.config;
    auto zero = key_argument_coverage(empty, bundle().personas, bundle().metric_config);
    for (const auto& [juror, fraction] : zero) CHECK(fraction == 0.0);
}

TEST_CASE("scripted dissenter reaches full key-argument coverage on a long run") {
    RunConfig config = scripted_config("rigid", Condition::Baseline, 2);
    config.patience_rounds = 12; // early stop only at the 12th unchanged round
    RunResult result = run_deliberation(config, bundle().personas, bundle().case_file);
    REQUIRE(!result.aborted);
    CHECK(result.record.total_turns == 144);
    auto coverage =
        key_argument_coverage(result.record, bundle().personas, bundle().metric_config);
    CHECK(coverage.at(dissenter_juror()) == 1.0); // 12 turns cycle all 6 arguments
}

TEST_CASE("cross-references count utterances naming another juror") {
    auto record = make_record(12, {round_at(12, Vote::Guilty, {8})}, Verdict::HungJury, "early_stop");
    for (int t = 1; t <= 12; ++t) record.events[t - 1] = Utterance{t, J((t - 1) % 12 + 1), "Hm."};
    CHECK(cross_reference_count(record) == 0);

    record.events[1] = Utterance{2, J(2), "I agree with Juror_5 about the knife."};
    CHECK(cross_reference_count(record) == 1);

    // self-mention does not count
    record.events[2] = Utterance{3, J(3), "Juror_3 is not changing his mind."};
    CHECK(cross_reference_count(record) == 1);

    // multiple references in one utterance still count once
    record.events[3] = Utterance{4, J(4), "Juror_5 and Juror_9 both have a point."};
    CHECK(cross_reference_count(record) == 2);

    // "juror 5" with a space also counts
    record.events[4] = Utterance{5, J(6), "What juror 5 said about the grip stuck with me."};
    CHECK(cross_reference_count(record) == 3);
}

TEST_CASE("narrative closure flags") {
    auto record = make_record(12, {round_at(12, Vote::Guilty, {8})}, Verdict::HungJury, "early_stop");
    for (int t = 1; t <= 12; ++t) record.events[t - 1] = Utterance{t, J((t - 1) % 12 + 1), "Hm."};
    CHECK(detect_narrative_closure(record, bundle().metric_config).empty());

    record.events[0] = Utterance{1, J(1), "We are done here. THE END."};
    record.events[1] = Utterance{2, J(2), "(stands up and exits the room)"};
    record.events[2] = Utterance{3, J(3), "I believe the jury is now unanimous."};
    record.events[3] = Utterance{4, J(4), "A plain argument about the knife."};
    auto flags = detect_narrative_closure(record, bundle().metric_config);
    REQUIRE(flags.size() == 3);
    CHECK(flags[0].pattern == "the_end");
    CHECK(flags[0].turn == 1);
    CHECK(flags[1].pattern == "stage_direction");
    CHECK(flags[2].pattern == "false_consensus");
}

TEST_CASE("a true unanimity declaration is not flagged as closure") {
    // all twelve voted NOT_GUILTY at turn 12; the declaration at 13 is true
    auto round = round_at(12, Vote::NotGuilty);
    DeliberationRecord record = make_record(12, {round}, Verdict::NotGuilty, "unanimous");
    record.events.pop_back(); // drop termination, extend by hand
    record.events.push_back(Utterance{13, J(1), "The jury is now unanimous."});
    record.events.push_back(Termination{13, Verdict::NotGuilty, "unanimous"});
    record.total_turns = 13;
    auto flags = detect_narrative_closure(record, bundle().metric_config);
    CHECK(flags.empty());
}

TEST_CASE("aggregate reproduces the worked cell examples") {
    RunMetrics hung;
    hung.verdict = Verdict::HungJury;

    SUBCASE("mean turns 44.0 and mean flips 1.0") {
        std::vector<CellRun> runs;
        for (auto [turns, flips] : std::initializer_list<std::pair<int, int>>{
                 {36, 1}, {48, 1}, {48, 1}}) {
            RunMetrics m = hung;
            m.total_turns = turns;
            m.num_changes = flips;
            runs.push_back({"model-a", "baseline", m});
        }
        auto rows = aggregate(runs);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].n == 3);
        CHECK(rows[0].hung == 3);
        CHECK(rows[0].avg_turns == 44.0);
        CHECK(rows[0].avg_flips == 1.0);
        CHECK(!rows[0].avg_rho);
    }
    SUBCASE("verdict counts 2 hung, 1 NG, 0 G") {
        std::vector<CellRun> runs;
        RunMetrics ng = hung;
        ng.verdict = Verdict::NotGuilty;
        runs.push_back({"m", "no_initial_vote", hung});
        runs.push_back({"m", "no_initial_vote", hung});
        runs.push_back({"m", "no_initial_vote", ng});
        auto rows = aggregate(runs);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].hung == 2);
        CHECK(rows[0].not_guilty == 1);
        CHECK(rows[0].guilty == 0);
    }
    SUBCASE("single run group averages equal that run") {
        RunMetrics m = hung;
        m.total_turns = 57;
        m.num_changes = 4;
        m.spearman_rho = 0.25;
        auto rows = aggregate({{"m", "baseline", m}});
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].avg_turns == 57.0);
        CHECK(rows[0].avg_flips == 4.0);
        CHECK(rows[0].avg_rho == 0.25);
        CHECK(rows[0].sd_turns == 0.0);
    }
}

TEST_CASE("aggregate means are exact and counts sum to N") {
    SeedStream rng(7);
    std::vector<CellRun> runs;
    double sum_turns = 0.0;
    for (int i = 0; i < 7; ++i) {
        RunMetrics m;
        m.verdict = static_cast<Verdict>(rng.next_below(3));
        m.total_turns = 12 * (1 + static_cast<int>(rng.next_below(12)));
        m.num_changes = static_cast<int>(rng.next_below(10));
        sum_turns += m.total_turns;
        runs.push_back({"m", "baseline", m});
    }
    auto rows = aggregate(runs);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n == 7);
    CHECK(rows[0].hung + rows[0].not_guilty + rows[0].guilty == 7);
    CHECK(rows[0].avg_turns == sum_turns / 7.0);
}

TEST_CASE("table formatting rounds to the published precision") {
    CHECK(format_double(61.0 + 1.0 / 3.0, 1) == "61.3");
    CHECK(format_double(2.0 / 3.0, 1) == "0.7");
    CHECK(format_double(10.0 / 3.0, 1) == "3.3");
    CHECK(format_double(44.0, 1) == "44.0");
    CHECK(format_double(0.98, 2) == "0.98");

    AggregateRow row;
    row.model = "model-a";
    row.condition = "baseline";
    row.n = 3;
    row.hung = 3;
    row.avg_turns = 44.0;
    row.avg_flips = 1.0;
    std::string table = format_aggregate_table({row});
    CHECK(table.find("model-a") != std::string::npos);
    CHECK(table.find("44.0") != std::string::npos);
    CHECK(table.find("n/a") != std::string::npos); // undefined rho prints n/a
}

TEST_CASE("detectors are case-insensitive") {
    auto record = make_record(12, {round_at(12, Vote::Guilty, {8})}, Verdict::HungJury, "early_stop");
    record.events[0] = Utterance{1, J(1), "THAT SWITCHBLADE IS THE WHOLE CASE."};
    record.events[1] = Utterance{2, J(2), "i agree with JUROR_5."};
    record.events[2] = Utterance{3, J(3), "the end."};
    auto cited = evidence_coverage(record, bundle().case_file, bundle().metric_config);
    CHECK(cited.count(2) == 1);
    CHECK(cross_reference_count(record) == 1);
    bool the_end = false;
    for (const auto& f : detect_narrative_closure(record, bundle().metric_config))
        if (f.pattern == "the_end") the_end = true;
    CHECK(the_end);
}
