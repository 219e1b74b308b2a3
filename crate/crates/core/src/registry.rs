//! Shipped country-code registry and the default EU member set.

use std::collections::BTreeSet;

/// ISO-3166-1 alpha-2 codes.
const ISO_ALPHA2: &[&str] = &[
    "AD", "AE", "AF", "AG", "AI", "AL", "AM", "AO", "AQ", "AR", "AS", "AT", "AU", "AW", "AX", "AZ",
    "BA", "BB", "BD", "BE", "BF", "BG", "BH", "BI", "BJ", "BL", "BM", "BN", "BO", "BQ", "BR", "BS",
    "BT", "BV", "BW", "BY", "BZ", "CA", "CC", "CD", "CF", "CG", "CH", "CI", "CK", "CL", "CM", "CN",
    "CO", "CR", "CU", "CV", "CW", "CX", "CY", "CZ", "DE", "DJ", "DK", "DM", "DO", "DZ", "EC", "EE",
    "EG", "EH", "ER", "ES", "ET", "FI", "FJ", "FK", "FM", "FO", "FR", "GA", "GB", "GD", "GE", "GF",
    "GG", "GH", "GI", "GL", "GM", "GN", "GP", "GQ", "GR", "GS", "GT", "GU", "GW", "GY", "HK", "HM",
    "HN", "HR", "HT", "HU", "ID", "IE", "IL", "IM", "IN", "IO", "IQ", "IR", "IS", "IT", "JE", "JM",
    "JO", "JP", "KE", "KG", "KH", "KI", "KM", "KN", "KP", "KR", "KW", "KY", "KZ", "LA", "LB", "LC",
    "LI", "LK", "LR", "LS", "LT", "LU", "LV", "LY", "MA", "MC", "MD", "ME", "MF", "MG", "MH", "MK",
    "ML", "MM", "MN", "MO", "MP", "MQ", "MR", "MS", "MT", "MU", "MV", "MW", "MX", "MY", "MZ", "NA",
    "NC", "NE", "NF", "NG", "NI", "NL", "NO", "NP", "NR", "NU", "NZ", "OM", "PA", "PE", "PF", "PG",
    "PH", "PK", "PL", "PM", "PN", "PR", "PS", "PT", "PW", "PY", "QA", "RE", "RO", "RS", "RU", "RW",
    "SA", "SB", "SC", "SD", "SE", "SG", "SH", "SI", "SJ", "SK", "SL", "SM", "SN", "SO", "SR", "SS",
    "ST", "SV", "SX", "SY", "SZ", "TC", "TD", "TF", "TG", "TH", "TJ", "TK", "TL", "TM", "TN", "TO",
    "TR", "TT", "TV", "TW", "TZ", "UA", "UG", "UM", "US", "UY", "UZ", "VA", "VC", "VE", "VG", "VI",
    "VN", "VU", "WF", "WS", "YE", "YT", "ZA", "ZM", "ZW",
];

/// Supranational filing authorities that show up in applicant country fields.
/// They are passed through untranslated.
pub const SUPRANATIONAL: &[&str] = &["EP", "WO", "EA", "AP", "OA", "XN", "XU"];

/// Pseudo-country holding the union of EU member portfolios.
pub const EU: &str = "EU";

/// EU-27 membership (static, not time-varying).
pub const EU27: &[&str] = &[
    "AT", "BE", "BG", "HR", "CY", "CZ", "DK", "EE", "FI", "FR", "DE", "GR", "HU", "IE", "IT", "LV",
    "LT", "LU", "MT", "NL", "PL", "PT", "RO", "SK", "SI", "ES", "SE",
];

/// True for ISO codes and supranational codes. The `EU` pseudo-country is
/// not a registry entry; see [`is_holder`].
pub fn is_country(code: &str) -> bool {
    ISO_ALPHA2.binary_search(&code).is_ok() || SUPRANATIONAL.contains(&code)
}

/// Codes accepted on an output axis: registry codes plus `EU`.
pub fn is_holder(code: &str) -> bool {
    code == EU || is_country(code)
}

pub fn eu27() -> BTreeSet<String> {
    EU27.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_sorted_and_unique() {
        assert!(ISO_ALPHA2.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ISO_ALPHA2.len(), 249);
    }

    #[test]
    fn eu27_members_are_registered() {
        assert_eq!(eu27().len(), 27);
        assert!(EU27.iter().all(|c| is_country(c)));
        assert!(!is_country("EU"));
        assert!(is_holder("EU"));
        assert!(is_country("WO"));
        assert!(!is_country("ZZ"));
    }
}
