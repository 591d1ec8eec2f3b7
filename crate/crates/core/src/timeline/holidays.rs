use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::Deserialize;

use crate::error::{Error, Result};

/// How a holiday's date is found in a given year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum HolidayRule {
    Fixed { month: u32, day: u32 },
    NthWeekday { month: u32, weekday: Weekday, nth: u8 },
    LastWeekday { month: u32, weekday: Weekday },
}

impl HolidayRule {
    pub fn date_in(&self, year: i32) -> Option<NaiveDate> {
        match *self {
            HolidayRule::Fixed { month, day } => NaiveDate::from_ymd_opt(year, month, day),
            HolidayRule::NthWeekday { month, weekday, nth } => NaiveDate::from_weekday_of_month_opt(year, month, weekday, nth),
            HolidayRule::LastWeekday { month, weekday } => {
                let next = if month == 12 {
                    NaiveDate::from_ymd_opt(year + 1, 1, 1)?
                } else {
                    NaiveDate::from_ymd_opt(year, month + 1, 1)?
                };
                let last = next.pred_opt()?;
                let back = (7 + last.weekday().num_days_from_monday() - weekday.num_days_from_monday()) % 7;
                last.checked_sub_days(Days::new(back as u64))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Holiday {
    pub name: String,
    #[serde(flatten)]
    pub rule: HolidayRule,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
pub struct HolidayCalendar {
    #[serde(rename = "holiday", default)]
    pub holidays: Vec<Holiday>,
}

impl HolidayCalendar {
    pub fn new(holidays: Vec<Holiday>) -> Result<Self> {
        let cal = HolidayCalendar { holidays };
        cal.validate()?;
        Ok(cal)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cal: HolidayCalendar = toml::from_str(s).map_err(|e| Error::parse("holiday calendar", e.to_string()))?;
        cal.validate()?;
        Ok(cal)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for h in &self.holidays {
            if !seen.insert(h.name.as_str()) {
                return Err(Error::Config(format!("duplicate holiday {:?}", h.name)));
            }
            // a rule that resolves in neither a leap nor a common year is broken
            if h.rule.date_in(2023).is_none() && h.rule.date_in(2024).is_none() {
                return Err(Error::Config(format!("holiday {:?} has an unresolvable date rule", h.name)));
            }
        }
        Ok(())
    }

    /// Whether holiday `index` falls in the seven days starting `week_start`.
    pub fn in_week(&self, index: usize, week_start: NaiveDate) -> bool {
        let end = week_start + Days::new(6);
        let rule = &self.holidays[index].rule;
        [week_start.year(), end.year()]
            .iter()
            .filter_map(|y| rule.date_in(*y))
            .any(|d| d >= week_start && d <= end)
    }

    pub fn len(&self) -> usize {
        self.holidays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holidays.is_empty()
    }
}
