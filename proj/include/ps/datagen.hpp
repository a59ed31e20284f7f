#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <vector>

#include "ps/core.hpp"

namespace ps {

struct CalendarDay {
  std::int64_t day_index = 0;
  int dow = 0;  ///< 0 = Monday ... 6 = Sunday
  int dom = 1;
  int month = 1;
  int doy = 1;
  int is_weekend = 0;
  int is_holiday = 0;

  std::array<double, 6> features() const {
    return {static_cast<double>(dow), static_cast<double>(dom), static_cast<double>(month),
            static_cast<double>(doy), static_cast<double>(is_weekend), static_cast<double>(is_holiday)};
  }
};

/// Names of the six calendar covariates, in feature order.
const std::vector<std::string>& calendar_feature_names();

/// Monday, 1 January 2018.
inline constexpr std::chrono::year_month_day kDefaultEpoch{std::chrono::year{2018}, std::chrono::January,
                                                          std::chrono::day{1}};

/// Consecutive days from the epoch with i.i.d. Bernoulli(p_holiday) holidays.
std::vector<CalendarDay> gen_calendar(std::size_t t_count, std::chrono::year_month_day epoch, double p_holiday,
                                      std::uint64_t seed);

struct NewsvendorGenParams {
  std::size_t products = 4;
  double baseline = 30.0;
  std::array<double, 2> holiday_lift{8.0, 5.0};  // products 0 and 1
  double july_offset = -7.0;
  double august_offset = 8.0;
  double sigma_a = 0.5;
  double sigma_b = 3.0;
  double sigma_c = 4.0;
  double p_holiday = 0.1;
  std::chrono::year_month_day epoch = kDefaultEpoch;
};

struct ShipmentGenParams {
  std::size_t locations = 4;
  double baseline = 30.0;
  double latent_sd = 10.0;
  double sigma_a = 0.3;
  double sigma_b = 4.0;
  double sigma_c = 1.2;
  double p_holiday = 0.1;
  std::chrono::year_month_day epoch = kDefaultEpoch;
};

/// Newsvendor segment for product j on a given day. A holiday on a midsummer
/// weekday labels products 0 and 1 as 'A'.
SegmentLabel newsvendor_segment(const CalendarDay& day, std::size_t j);
double newsvendor_mean(const NewsvendorGenParams& p, const CalendarDay& day, std::size_t j);

/// Shipment segment of a day; holidays ('B') take precedence over the
/// early-month window ('A').
SegmentLabel shipment_segment(const CalendarDay& day);
/// Mean before the location offset. `latent` is the day's hidden driver.
double shipment_mean(const ShipmentGenParams& p, const CalendarDay& day, double latent);
double shipment_location_offset(std::size_t location, std::size_t locations);

/// Demand data with one segment column per product.
Dataset gen_newsvendor(std::size_t t_count, const NewsvendorGenParams& params, std::uint64_t seed);
/// Demand data with a single segment column. The latent driver is not a covariate.
Dataset gen_shipment(std::size_t t_count, const ShipmentGenParams& params, std::uint64_t seed);

}  // namespace ps
