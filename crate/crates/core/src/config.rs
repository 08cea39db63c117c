//! Analysis option axes and their canonical `AO-HA-CS-OR-ND` spelling.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use crate::numdom::DomainKind as Nd;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ha {
    So,
    Ap,
    ApSo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Or {
    Allo,
    Clas,
    Smus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ao {
    Td,
    Bu,
    TdBu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cs {
    Ci,
    Cfa1,
    Typ1,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown {axis} value '{value}'")]
    BadValue { axis: &'static str, value: String },
    #[error("expected AO-HA-CS-OR-ND, got '{0}'")]
    Shape(String),
    #[error("unknown axis '{0}'")]
    BadAxis(String),
}

macro_rules! axis {
    ($t:ident, $name:literal, [$($v:ident => $s:literal),+]) => {
        impl $t {
            pub const ALL: &'static [$t] = &[$($t::$v),+];
            pub fn label(self) -> &'static str {
                match self { $($t::$v => $s),+ }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }
        impl FromStr for $t {
            type Err = ConfigError;
            fn from_str(s: &str) -> Result<Self, ConfigError> {
                match s { $($s => Ok($t::$v),)+ _ => Err(ConfigError::BadValue { axis: $name, value: s.into() }) }
            }
        }
    };
}

axis!(Ha, "HA", [So => "SO", Ap => "AP", ApSo => "AP+SO"]);
axis!(Or, "OR", [Allo => "ALLO", Clas => "CLAS", Smus => "SMUS"]);
axis!(Ao, "AO", [Td => "TD", Bu => "BU", TdBu => "TD+BU"]);
axis!(Cs, "CS", [Ci => "CI", Cfa1 => "1CFA", Typ1 => "1TYP"]);

pub const ND_ALL: &[Nd] = &[Nd::Int, Nd::Pol];

impl FromStr for Nd {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "INT" => Ok(Nd::Int),
            "POL" => Ok(Nd::Pol),
            _ => Err(ConfigError::BadValue { axis: "ND", value: s.into() }),
        }
    }
}

/// One point of the option space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnalysisConfig {
    pub ao: Ao,
    pub ha: Ha,
    pub cs: Cs,
    pub or: Or,
    pub nd: Nd,
}

impl fmt::Display for AnalysisConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}-{}-{}", self.ao, self.ha, self.cs, self.or, self.nd)
    }
}

impl FromStr for AnalysisConfig {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        // `+` never sits next to `-`, so a plain split is unambiguous.
        let parts: Vec<&str> = s.trim().split('-').collect();
        let [ao, ha, cs, or, nd] = parts[..] else {
            return Err(ConfigError::Shape(s.into()));
        };
        Ok(AnalysisConfig { ao: ao.parse()?, ha: ha.parse()?, cs: cs.parse()?, or: or.parse()?, nd: nd.parse()? })
    }
}

/// Restricts some axes to a subset of their values; empty means unrestricted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFilter {
    pub ao: Vec<Ao>,
    pub ha: Vec<Ha>,
    pub cs: Vec<Cs>,
    pub or: Vec<Or>,
    pub nd: Vec<Nd>,
}

impl ConfigFilter {
    pub fn admits(&self, c: &AnalysisConfig) -> bool {
        fn ok<T: PartialEq>(v: &[T], x: &T) -> bool {
            v.is_empty() || v.contains(x)
        }
        ok(&self.ao, &c.ao) && ok(&self.ha, &c.ha) && ok(&self.cs, &c.cs) && ok(&self.or, &c.or) && ok(&self.nd, &c.nd)
    }
}

impl FromStr for ConfigFilter {
    type Err = ConfigError;

    /// `AXIS=V,AXIS=V,...`; repeating an axis allows several values.
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let mut f = ConfigFilter::default();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (axis, v) = item.split_once('=').ok_or_else(|| ConfigError::Shape(item.into()))?;
            match axis.trim().to_ascii_uppercase().as_str() {
                "AO" => f.ao.push(v.trim().parse()?),
                "HA" => f.ha.push(v.trim().parse()?),
                "CS" => f.cs.push(v.trim().parse()?),
                "OR" => f.or.push(v.trim().parse()?),
                "ND" => f.nd.push(v.trim().parse()?),
                other => return Err(ConfigError::BadAxis(other.into())),
            }
        }
        Ok(f)
    }
}

/// Cross product of all axes in a fixed order, restricted by `filter`.
pub fn enumerate_configs(filter: Option<&ConfigFilter>) -> Vec<AnalysisConfig> {
    let mut out = Vec::new();
    for &ao in Ao::ALL {
        for &ha in Ha::ALL {
            for &cs in Cs::ALL {
                for &or in Or::ALL {
                    for &nd in ND_ALL {
                        let c = AnalysisConfig { ao, ha, cs, or, nd };
                        if filter.is_none_or(|f| f.admits(&c)) {
                            out.push(c);
                        }
                    }
                }
            }
        }
    }
    out
}
