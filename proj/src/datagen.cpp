#include "ps/datagen.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace ps {

const std::vector<std::string>& calendar_feature_names() {
  static const std::vector<std::string> names{"day_of_week", "day_of_month", "month",
                                              "day_of_year", "is_weekend",   "is_holiday"};
  return names;
}

std::vector<CalendarDay> gen_calendar(std::size_t t_count, std::chrono::year_month_day epoch, double p_holiday,
                                      std::uint64_t seed) {
  using namespace std::chrono;
  std::mt19937_64 rng(SeedSpec(seed).derive("holidays"));
  std::bernoulli_distribution holiday(p_holiday);
  const sys_days start{epoch};
  std::vector<CalendarDay> out;
  out.reserve(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    const sys_days today = start + days{static_cast<int>(t)};
    const year_month_day ymd{today};
    const sys_days jan1{ymd.year() / January / 1};
    CalendarDay d;
    d.day_index = static_cast<std::int64_t>(t);
    d.dow = static_cast<int>(weekday{today}.iso_encoding()) - 1;
    d.dom = static_cast<int>(static_cast<unsigned>(ymd.day()));
    d.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
    d.doy = static_cast<int>((today - jan1).count()) + 1;
    d.is_weekend = d.dow >= 5 ? 1 : 0;
    d.is_holiday = holiday(rng) ? 1 : 0;
    out.push_back(d);
  }
  return out;
}

SegmentLabel newsvendor_segment(const CalendarDay& day, std::size_t j) {
  if (day.is_holiday == 1 && j < 2) return 'A';
  if ((day.month == 7 || day.month == 8) && day.dow <= 3) return 'C';
  return 'B';
}

double newsvendor_mean(const NewsvendorGenParams& p, const CalendarDay& day, std::size_t j) {
  const double jj = static_cast<double>(j);
  switch (newsvendor_segment(day, j)) {
    case 'A': return p.baseline + p.holiday_lift[j];
    case 'C': return p.baseline + (day.month == 7 ? p.july_offset : p.august_offset) + 4.0 * jj;
    default:
      return p.baseline + 6.0 * std::sin(2.0 * std::numbers::pi * day.month / 12.0) * (day.dow + 1) / 5.0 *
                              (1.0 + 0.15 * jj);
  }
}

SegmentLabel shipment_segment(const CalendarDay& day) {
  if (day.is_holiday == 1) return 'B';
  if (day.dom <= 8 && day.month <= 4) return 'A';
  return 'C';
}

double shipment_mean(const ShipmentGenParams& p, const CalendarDay& day, double latent) {
  switch (shipment_segment(day)) {
    case 'A': return p.baseline + 25.0;
    case 'B': return p.baseline + 5.0 + 20.0 * latent;
    default:
      return p.baseline + 0.08 * std::sqrt(static_cast<double>(day.doy)) + 4.0 * day.dow * day.dow +
             10.0 * day.is_weekend;
  }
}

double shipment_location_offset(std::size_t location, std::size_t locations) {
  return std::sin(2.0 * std::numbers::pi * static_cast<double>(location) / static_cast<double>(locations));
}

Dataset gen_newsvendor(std::size_t t_count, const NewsvendorGenParams& params, std::uint64_t seed) {
  const SeedSpec s(seed);
  auto calendar = gen_calendar(t_count, params.epoch, params.p_holiday, s.derive("calendar"));
  std::mt19937_64 rng(s.derive("demand-noise"));
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data(calendar_feature_names(), params.products, params.products);
  std::vector<double> y(params.products);
  std::vector<SegmentLabel> seg(params.products);
  for (const auto& day : calendar) {
    for (std::size_t j = 0; j < params.products; ++j) {
      seg[j] = newsvendor_segment(day, j);
      const double sigma = seg[j] == 'A' ? params.sigma_a : seg[j] == 'B' ? params.sigma_b : params.sigma_c;
      y[j] = std::max(0.0, newsvendor_mean(params, day, j) + sigma * normal(rng));
    }
    auto f = day.features();
    data.add_row(day.day_index, f, y, seg);
  }
  return data;
}

Dataset gen_shipment(std::size_t t_count, const ShipmentGenParams& params, std::uint64_t seed) {
  const SeedSpec s(seed);
  auto calendar = gen_calendar(t_count, params.epoch, params.p_holiday, s.derive("calendar"));
  std::mt19937_64 rng(s.derive("demand-noise"));
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data(calendar_feature_names(), params.locations, 1);
  std::vector<double> y(params.locations);
  for (const auto& day : calendar) {
    const double latent = params.latent_sd * normal(rng);
    const SegmentLabel seg = shipment_segment(day);
    const double sigma = seg == 'A' ? params.sigma_a : seg == 'B' ? params.sigma_b : params.sigma_c;
    const double mu = shipment_mean(params, day, latent);
    for (std::size_t l = 0; l < params.locations; ++l) {
      y[l] = std::max(0.0, mu + shipment_location_offset(l, params.locations) + sigma * normal(rng));
    }
    auto f = day.features();
    const SegmentLabel labels[] = {seg};
    data.add_row(day.day_index, f, y, labels);
  }
  return data;
}

}  // namespace ps
