#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "spillover/error.hpp"
#include "spillover/ingest.hpp"

using namespace spillover;
using namespace std::chrono;

namespace {

ParsedRecords parse(const std::string& text, const ColumnMapping& m = {}) {
    std::istringstream in(text);
    return parse_price_records(in, m);
}

Instant at(const char* s) { return parse_rfc3339(s); }

std::string label(const char* ts, const SessionSpec& spec = SessionSpec::cme_default()) {
    const auto l = session_label(at(ts), spec);
    return l ? format_iso_date(*l) : "gap";
}

PriceRecord rec(const char* ts, double price, const std::string& sym = "CL") { return PriceRecord{at(ts), sym, price}; }

}  // namespace

TEST(Rfc3339, ParsesOffsetsAndFractions) {
    EXPECT_EQ(at("2010-01-04T09:30:00-05:00"), at("2010-01-04T14:30:00Z"));
    EXPECT_EQ(at("2010-01-04 14:30:00+00:00"), at("2010-01-04T14:30:00Z"));
    EXPECT_EQ(at("2010-01-04T14:30:00.250Z") - at("2010-01-04T14:30:00Z"), milliseconds{250});
    EXPECT_EQ(format_rfc3339(at("2010-01-04T09:30:00-05:00")), "2010-01-04T14:30:00Z");
    EXPECT_EQ(format_rfc3339(at("2010-01-04T14:30:00.5Z")), "2010-01-04T14:30:00.500Z");
}

TEST(Rfc3339, RejectsMissingOffset) {
    EXPECT_THROW(at("2010-01-04T09:30:00"), InputError);
    EXPECT_THROW(at("2010-01-04T25:30:00Z"), InputError);
    EXPECT_THROW(at("garbage"), InputError);
}

TEST(ParsePriceRecords, MapsFields) {
    const auto r = parse("timestamp,symbol,price\n2010-01-04T09:30:00-05:00,CL,81.51\n");
    ASSERT_EQ(r.by_symbol.at("CL").size(), 1u);
    const auto& p = r.by_symbol.at("CL").front();
    EXPECT_EQ(p.symbol, "CL");
    EXPECT_DOUBLE_EQ(p.price, 81.51);
    EXPECT_EQ(p.timestamp, at("2010-01-04T14:30:00Z"));
}

TEST(ParsePriceRecords, EmptyStream) {
    EXPECT_TRUE(parse("").by_symbol.empty());
    EXPECT_TRUE(parse("timestamp,symbol,price\n").by_symbol.empty());
}

TEST(ParsePriceRecords, LastDuplicateWins) {
    const auto r = parse(
        "timestamp,symbol,price\n"
        "2010-01-04T09:30:00-05:00,CL,80\n"
        "2010-01-04T09:35:00-05:00,CL,82\n"
        "2010-01-04T14:30:00Z,CL,81\n");
    const auto& v = r.by_symbol.at("CL");
    ASSERT_EQ(v.size(), 2u);
    EXPECT_DOUBLE_EQ(v[0].price, 81.0);
    EXPECT_EQ(r.duplicates_replaced, 1u);
}

TEST(ParsePriceRecords, SortsAndGroupsBySymbol) {
    const auto r = parse(
        "symbol\tprice\ttimestamp\n"
        "GC\t1100\t2010-01-04T10:00:00Z\n"
        "CL\t81\t2010-01-04T10:05:00Z\n"
        "GC\t1101\t2010-01-04T09:00:00Z\n");
    ASSERT_EQ(r.by_symbol.size(), 2u);
    EXPECT_DOUBLE_EQ(r.by_symbol.at("GC")[0].price, 1101.0);
    EXPECT_DOUBLE_EQ(r.by_symbol.at("GC")[1].price, 1100.0);
}

TEST(ParsePriceRecords, CustomColumnNames) {
    ColumnMapping m{"time", "ticker", "close", ','};
    const auto r = parse("ticker,time,close\nES,2010-01-04T10:00:00Z,1130.5\n", m);
    EXPECT_DOUBLE_EQ(r.by_symbol.at("ES")[0].price, 1130.5);
    EXPECT_THROW(parse("a,b,c\n1,2,3\n", m), InputError);
}

TEST(ParsePriceRecords, NonPositivePricesAreCounted) {
    const auto r = parse(
        "timestamp,symbol,price\n"
        "2010-01-04T10:00:00Z,CL,0\n"
        "2010-01-04T10:05:00Z,CL,-1\n"
        "2010-01-04T10:10:00Z,CL,80\n");
    EXPECT_EQ(r.rejected_nonpositive, 2u);
    EXPECT_EQ(r.by_symbol.at("CL").size(), 1u);
}

TEST(ParsePriceRecords, MalformedRowCarriesLineNumber) {
    const std::string head = "timestamp,symbol,price\n2010-01-04T10:00:00Z,CL,80\n";
    for (const std::string bad : {"2010-01-04T10:05:00Z,CL,abc\n", "not-a-time,CL,80\n", "2010-01-04T10:05:00Z,CL\n"}) {
        try {
            parse(head + "\n" + bad);
            FAIL() << bad;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), 4u) << bad;
        }
    }
}

TEST(SessionLabel, EveningBelongsToNextDay) {
    EXPECT_EQ(label("2010-01-04T18:00:00-06:00"), "2010-01-05");
    EXPECT_EQ(label("2010-01-04T17:00:00-06:00"), "2010-01-05");
}

TEST(SessionLabel, DaytimeBelongsToSameDay) {
    EXPECT_EQ(label("2010-01-06T10:00:00-06:00"), "2010-01-06");
    EXPECT_EQ(label("2010-01-06T16:00:00-06:00"), "2010-01-06");
    EXPECT_EQ(label("2010-01-06T00:00:00-06:00"), "2010-01-06");
}

TEST(SessionLabel, MaintenanceGapIsDropped) {
    EXPECT_EQ(label("2010-01-06T16:00:01-06:00"), "gap");
    EXPECT_EQ(label("2010-01-06T16:59:59-06:00"), "gap");
}

TEST(SessionLabel, FollowsDaylightSaving) {
    // 17:30 CDT in July is 22:30 UTC; in January the same UTC clock is 16:30 CST.
    EXPECT_EQ(label("2010-07-06T22:30:00Z"), "2010-07-07");
    EXPECT_EQ(label("2010-01-06T22:30:00Z"), "gap");
}

TEST(SessionLabel, DaySessionWithoutWrap) {
    SessionSpec spec;
    spec.session_start = hours{9};
    spec.session_end = hours{17};
    EXPECT_EQ(label("2010-01-06T09:00:00Z", spec), "2010-01-06");
    EXPECT_EQ(label("2010-01-06T08:59:00Z", spec), "gap");
    EXPECT_EQ(label("2010-01-06T17:30:00Z", spec), "gap");
}

TEST(AssignSessions, HolidaySessionsRemoved) {
    const std::vector<PriceRecord> recs = {
        rec("2009-12-24T09:00:00-06:00", 75), rec("2009-12-24T10:00:00-06:00", 76),
        rec("2009-12-25T09:00:00-06:00", 75), rec("2009-12-25T10:00:00-06:00", 76),
        rec("2009-12-28T09:00:00-06:00", 77), rec("2009-12-28T10:00:00-06:00", 78),
    };
    const auto a = assign_sessions(recs, SessionSpec::cme_default());
    ASSERT_EQ(a.series.sessions.size(), 1u);
    EXPECT_EQ(format_iso_date(a.series.sessions[0].date), "2009-12-28");
    EXPECT_EQ(a.stats.holiday_sessions.size(), 2u);
    EXPECT_EQ(a.stats.holiday_records, 4u);
}

TEST(AssignSessions, ShortSessionsAndGapRecordsCounted) {
    const std::vector<PriceRecord> recs = {
        rec("2010-01-05T09:00:00-06:00", 80),
        rec("2010-01-05T16:30:00-06:00", 80),  // gap
        rec("2010-01-05T18:00:00-06:00", 81),  // opens 01-06
        rec("2010-01-06T09:00:00-06:00", 82),
    };
    const auto a = assign_sessions(recs, SessionSpec::cme_default());
    ASSERT_EQ(a.series.sessions.size(), 1u);
    EXPECT_EQ(format_iso_date(a.series.sessions[0].date), "2010-01-06");
    EXPECT_EQ(a.series.sessions[0].prices, (std::vector<double>{81, 82}));
    EXPECT_EQ(a.stats.gap_records, 1u);
    ASSERT_EQ(a.stats.short_sessions.size(), 1u);
    EXPECT_EQ(format_iso_date(a.stats.short_sessions[0]), "2010-01-05");
}

TEST(AssignSessions, RejectsMixedOrUnsortedInput) {
    const auto spec = SessionSpec::cme_default();
    const std::vector<PriceRecord> mixed = {rec("2010-01-05T09:00:00Z", 1), rec("2010-01-05T09:05:00Z", 1, "GC")};
    EXPECT_THROW(assign_sessions(mixed, spec), InputError);
    const std::vector<PriceRecord> unsorted = {rec("2010-01-05T09:05:00Z", 1), rec("2010-01-05T09:00:00Z", 1)};
    EXPECT_THROW(assign_sessions(unsorted, spec), InputError);
}

// Random five-minute records over two months: every record is either kept in
// exactly one session or accounted for by one of the drop counters, and no
// kept session carries a holiday label.
TEST(AssignSessions, PartitionProperty) {
    const auto spec = SessionSpec::cme_default();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::bernoulli_distribution keep(0.3);
        std::vector<PriceRecord> recs;
        auto t = at("2009-12-01T00:00:00Z");
        const auto end = at("2010-02-01T00:00:00Z");
        for (; t < end; t += minutes{5}) {
            if (keep(rng)) recs.push_back(PriceRecord{t, "CL", 80.0});
        }
        const auto a = assign_sessions(recs, spec);
        std::size_t kept = 0;
        for (std::size_t i = 0; i < a.series.sessions.size(); ++i) {
            const auto& s = a.series.sessions[i];
            kept += s.prices.size();
            EXPECT_GE(s.prices.size(), 2u);
            EXPECT_FALSE(spec.holidays.is_holiday(s.date));
            if (i > 0) EXPECT_LT(a.series.sessions[i - 1].date, s.date);
            for (const auto& ts : s.times) EXPECT_EQ(session_label(ts, spec), s.date);
        }
        const std::size_t short_records = a.stats.short_sessions.size();  // one record each
        EXPECT_EQ(kept + a.stats.gap_records + a.stats.holiday_records + short_records, recs.size());
    }
}

TEST(LogReturns, Definition) {
    EXPECT_EQ(log_returns(std::vector<double>{100, 100}), std::vector<double>{0.0});
    const auto r = log_returns(std::vector<double>{100, 110});
    EXPECT_NEAR(r[0], 0.0953102, 1e-7);
    const auto r2 = log_returns(std::vector<double>{100, 90, 99});
    EXPECT_NEAR(r2[0], std::log(0.9), 1e-15);
    EXPECT_NEAR(r2[1], std::log(1.1), 1e-15);
}

TEST(LogReturns, RejectsNonPositiveAndShortInput) {
    EXPECT_THROW(log_returns(std::vector<double>{100, 0}), InputError);
    EXPECT_THROW(log_returns(std::vector<double>{-1, 2}), InputError);
    EXPECT_THROW(log_returns(std::vector<double>{100}), InputError);
}

TEST(LogReturns, PriceRoundTrip) {
    std::mt19937_64 rng(42);
    std::lognormal_distribution<double> step(0.0, 0.01);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p{50.0 + trial};
        for (int k = 0; k < 300; ++k) p.push_back(p.back() * step(rng));
        const auto r = log_returns(p);
        double sum = 0.0;
        for (double x : r) sum += x;
        EXPECT_NEAR(p.front() * std::exp(sum) / p.back(), 1.0, 1e-12);
    }
}

TEST(Resample, LastObservationCarriedForward) {
    IntradaySeries s{"CL", {Session{parse_iso_date("2010-01-06"),
                                    {at("2010-01-06T15:01:00Z"), at("2010-01-06T15:03:00Z"),
                                     at("2010-01-06T15:12:00Z"), at("2010-01-06T15:16:00Z")},
                                    {1.0, 2.0, 3.0, 4.0}}}};
    const auto g = resample(s, minutes{5});
    ASSERT_EQ(g.sessions.size(), 1u);
    const auto& out = g.sessions[0];
    EXPECT_EQ(out.times, (std::vector<Instant>{at("2010-01-06T15:05:00Z"), at("2010-01-06T15:10:00Z"),
                                               at("2010-01-06T15:15:00Z")}));
    EXPECT_EQ(out.prices, (std::vector<double>{2.0, 2.0, 3.0}));
    EXPECT_THROW(resample(s, minutes{0}), ConfigError);
}

TEST(Resample, DropsSessionsLeftTooShort) {
    IntradaySeries s{"CL", {Session{parse_iso_date("2010-01-06"),
                                    {at("2010-01-06T15:01:00Z"), at("2010-01-06T15:03:00Z")}, {1.0, 2.0}}}};
    EXPECT_TRUE(resample(s, minutes{5}).sessions.empty());
}

TEST(SessionFile, RoundTripAndDeterminism) {
    const std::string text =
        "timestamp,symbol,price\n"
        "2010-01-05T18:00:00-06:00,CL,81\n2010-01-06T09:00:00-06:00,CL,82\n2010-01-06T09:05:00-06:00,CL,81.5\n"
        "2010-01-05T18:00:00-06:00,GC,1100\n2010-01-06T09:00:00-06:00,GC,1101\n";
    auto build = [&] {
        const auto parsed = parse(text);
        std::vector<IntradaySeries> all;
        for (const auto& [sym, recs] : parsed.by_symbol) {
            all.push_back(assign_sessions(recs, SessionSpec::cme_default()).series);
        }
        return format_sessions(all);
    };
    const std::string a = build();
    EXPECT_EQ(a, build());
    std::istringstream in(a);
    const auto back = parse_sessions(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(format_sessions(back), a);
    EXPECT_EQ(back[0].sessions[0].prices.size(), 3u);
}
