use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The eleven modulation classes, in their stable integer order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModClass {
    Bpsk,
    Qpsk,
    Psk8,
    Pam4,
    Qam16,
    Qam64,
    Gfsk,
    Cpfsk,
    AmDsb,
    AmSsb,
    Wbfm,
}

impl ModClass {
    pub const ALL: [ModClass; 11] = [
        ModClass::Bpsk,
        ModClass::Qpsk,
        ModClass::Psk8,
        ModClass::Pam4,
        ModClass::Qam16,
        ModClass::Qam64,
        ModClass::Gfsk,
        ModClass::Cpfsk,
        ModClass::AmDsb,
        ModClass::AmSsb,
        ModClass::Wbfm,
    ];

    pub const COUNT: usize = 11;

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<ModClass> {
        Self::ALL.get(usize::from(id)).copied()
    }

    pub fn is_digital(self) -> bool {
        !self.is_analog()
    }

    pub fn is_analog(self) -> bool {
        matches!(self, ModClass::AmDsb | ModClass::AmSsb | ModClass::Wbfm)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModClass::Bpsk => "BPSK",
            ModClass::Qpsk => "QPSK",
            ModClass::Psk8 => "8PSK",
            ModClass::Pam4 => "PAM4",
            ModClass::Qam16 => "QAM16",
            ModClass::Qam64 => "QAM64",
            ModClass::Gfsk => "GFSK",
            ModClass::Cpfsk => "CPFSK",
            ModClass::AmDsb => "AM-DSB",
            ModClass::AmSsb => "AM-SSB",
            ModClass::Wbfm => "WBFM",
        }
    }
}

impl fmt::Display for ModClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        ModClass::ALL
            .into_iter()
            .find(|c| c.name() == upper || (*c == ModClass::Psk8 && upper == "PSK8"))
            .ok_or_else(|| Error::Format(format!("unknown modulation class {s:?}")))
    }
}
