//! The canonical 127-entry feature registry.
//!
//! Order is fixed: 35 time-domain entries (ids 0..=34), 45 frequency-domain
//! entries (35..=79), 47 time-frequency entries (80..=126). Entries flagged
//! amplitude-invariant are unchanged (up to rounding) when the input is
//! scaled by a positive constant.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const REGISTRY_VERSION: &str = "condmon-features-v1";
pub const FEATURE_COUNT: usize = 127;
pub const TIME_COUNT: usize = 35;
pub const FREQ_COUNT: usize = 45;
pub const TIMEFREQ_COUNT: usize = 47;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Time,
    Frequency,
    TimeFrequency,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::Time, Domain::Frequency, Domain::TimeFrequency];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Time => "time",
            Domain::Frequency => "frequency",
            Domain::TimeFrequency => "time-frequency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureInfo {
    pub id: usize,
    pub name: &'static str,
    pub domain: Domain,
    pub amplitude_invariant: bool,
    pub description: &'static str,
}

use Domain::{Frequency as F, Time as T, TimeFrequency as TF};

const INV: bool = true;
const AMP: bool = false;

#[rustfmt::skip]
const ENTRIES: [(&str, Domain, bool, &str); FEATURE_COUNT] = [
    // time domain
    ("Mean", T, AMP, "Sample mean"),
    ("Variance", T, AMP, "Population variance"),
    ("Standard Deviation", T, AMP, "Population standard deviation"),
    ("Skewness", T, INV, "Third standardized moment; 0 for constant input"),
    ("Kurtosis", T, INV, "Fourth standardized moment (Pearson); 0 for constant input"),
    ("RMS Energy", T, AMP, "Root mean square amplitude"),
    ("Peak Amplitude", T, AMP, "Maximum absolute sample"),
    ("Crest Factor", T, INV, "Peak amplitude / RMS"),
    ("Shape Factor", T, INV, "RMS / mean absolute value"),
    ("Impulse Factor", T, INV, "Peak amplitude / mean absolute value"),
    ("Clearance Factor", T, INV, "Peak amplitude / (mean sqrt|x|)^2"),
    ("Zero Crossing Rate", T, INV, "Sign changes between consecutive samples / (N-1)"),
    ("Temporal Centroid", T, INV, "sum n|x[n]| / sum |x[n]|, in seconds"),
    ("Mean Absolute Value", T, AMP, "Mean of |x|"),
    ("Peak-to-Peak", T, AMP, "max(x) - min(x)"),
    ("Minimum", T, AMP, "Smallest sample"),
    ("Maximum", T, AMP, "Largest sample"),
    ("Median", T, AMP, "Median sample"),
    ("Interquartile Range", T, AMP, "75th - 25th percentile (linear interpolation)"),
    ("Mean Absolute Deviation", T, AMP, "Mean of |x - mean|"),
    ("Signal Energy", T, AMP, "sum x^2"),
    ("Log Energy", T, AMP, "10 log10(mean x^2 + 1e-12)"),
    ("Frame RMS Mean", T, AMP, "Mean of short-time frame RMS"),
    ("Frame RMS Std", T, AMP, "Standard deviation of short-time frame RMS"),
    ("Frame RMS Max", T, AMP, "Maximum short-time frame RMS"),
    ("Frame RMS Variation", T, INV, "Frame RMS std / mean"),
    ("Frame ZCR Mean", T, INV, "Mean short-time zero crossing rate"),
    ("Frame ZCR Std", T, INV, "Standard deviation of short-time zero crossing rate"),
    ("Lag-1 Autocorrelation", T, INV, "Normalized autocorrelation at one-sample lag"),
    ("Temporal Spread", T, INV, "|x|-weighted standard deviation of time about the temporal centroid, seconds"),
    ("Hjorth Mobility", T, INV, "sqrt(var(dx) / var(x))"),
    ("Hjorth Complexity", T, INV, "Mobility of dx / mobility of x"),
    ("Absolute 95th Percentile", T, AMP, "95th percentile of |x|"),
    ("Outlier Ratio", T, INV, "Fraction of samples more than 3 std from the mean"),
    ("Teager-Kaiser Energy", T, AMP, "Mean of x[n]^2 - x[n-1] x[n+1]"),
    // frequency domain (frame-averaged power spectrum)
    ("Spectral Centroid", F, INV, "Power-weighted mean frequency, Hz"),
    ("Spectral Bandwidth", F, INV, "Power-weighted standard deviation about the centroid, Hz"),
    ("Spectral Rolloff", F, INV, "Frequency below which 85% of power lies, Hz"),
    ("Spectral Flux", F, INV, "Mean L2 distance between successive unit-norm magnitude frames"),
    ("Spectral Flatness", F, INV, "Geometric / arithmetic mean of power"),
    ("Spectral Entropy", F, INV, "Shannon entropy of the normalized power, divided by ln(bins)"),
    ("Spectral Contrast", F, INV, "Mean over six octave bands of log10(peak / valley)"),
    ("Spectral Skewness", F, INV, "Third standardized moment of the frequency distribution"),
    ("Spectral Kurtosis", F, INV, "Fourth standardized moment of the frequency distribution"),
    ("Dominant Frequency", F, INV, "Frequency of the strongest bin, Hz"),
    ("Octave Band 1 Energy Ratio", F, INV, "Power share of [0, nyq/128)"),
    ("Octave Band 2 Energy Ratio", F, INV, "Power share of [nyq/128, nyq/64)"),
    ("Octave Band 3 Energy Ratio", F, INV, "Power share of [nyq/64, nyq/32)"),
    ("Octave Band 4 Energy Ratio", F, INV, "Power share of [nyq/32, nyq/16)"),
    ("Octave Band 5 Energy Ratio", F, INV, "Power share of [nyq/16, nyq/8)"),
    ("Octave Band 6 Energy Ratio", F, INV, "Power share of [nyq/8, nyq/4)"),
    ("Octave Band 7 Energy Ratio", F, INV, "Power share of [nyq/4, nyq/2)"),
    ("Octave Band 8 Energy Ratio", F, INV, "Power share of [nyq/2, nyq]"),
    ("MFCC-1", F, AMP, "Frame mean of cepstral coefficient 0"),
    ("MFCC-2", F, INV, "Frame mean of cepstral coefficient 1"),
    ("MFCC-3", F, INV, "Frame mean of cepstral coefficient 2"),
    ("MFCC-4", F, INV, "Frame mean of cepstral coefficient 3"),
    ("MFCC-5", F, INV, "Frame mean of cepstral coefficient 4"),
    ("MFCC-6", F, INV, "Frame mean of cepstral coefficient 5"),
    ("MFCC-7", F, INV, "Frame mean of cepstral coefficient 6"),
    ("MFCC-8", F, INV, "Frame mean of cepstral coefficient 7"),
    ("MFCC-9", F, INV, "Frame mean of cepstral coefficient 8"),
    ("MFCC-10", F, INV, "Frame mean of cepstral coefficient 9"),
    ("MFCC-11", F, INV, "Frame mean of cepstral coefficient 10"),
    ("MFCC-12", F, INV, "Frame mean of cepstral coefficient 11"),
    ("MFCC-13", F, INV, "Frame mean of cepstral coefficient 12"),
    ("MFCC-1 Std", F, INV, "Frame standard deviation of cepstral coefficient 0"),
    ("MFCC-2 Std", F, INV, "Frame standard deviation of cepstral coefficient 1"),
    ("MFCC-3 Std", F, INV, "Frame standard deviation of cepstral coefficient 2"),
    ("MFCC-4 Std", F, INV, "Frame standard deviation of cepstral coefficient 3"),
    ("MFCC-5 Std", F, INV, "Frame standard deviation of cepstral coefficient 4"),
    ("MFCC-6 Std", F, INV, "Frame standard deviation of cepstral coefficient 5"),
    ("MFCC-7 Std", F, INV, "Frame standard deviation of cepstral coefficient 6"),
    ("MFCC-8 Std", F, INV, "Frame standard deviation of cepstral coefficient 7"),
    ("MFCC-9 Std", F, INV, "Frame standard deviation of cepstral coefficient 8"),
    ("MFCC-10 Std", F, INV, "Frame standard deviation of cepstral coefficient 9"),
    ("MFCC-11 Std", F, INV, "Frame standard deviation of cepstral coefficient 10"),
    ("MFCC-12 Std", F, INV, "Frame standard deviation of cepstral coefficient 11"),
    ("MFCC-13 Std", F, INV, "Frame standard deviation of cepstral coefficient 12"),
    ("Chroma Mean", F, AMP, "Mean of the frame-averaged 12-bin chroma power vector"),
    // time-frequency domain (spectrogram trajectories and wavelet subbands)
    ("Centroid Trajectory Mean", TF, INV, "Mean over frames of the spectral centroid"),
    ("Centroid Trajectory Std", TF, INV, "Std over frames of the spectral centroid"),
    ("Centroid Trajectory Max", TF, INV, "Max over frames of the spectral centroid"),
    ("Bandwidth Trajectory Mean", TF, INV, "Mean over frames of the spectral bandwidth"),
    ("Bandwidth Trajectory Std", TF, INV, "Std over frames of the spectral bandwidth"),
    ("Bandwidth Trajectory Max", TF, INV, "Max over frames of the spectral bandwidth"),
    ("Rolloff Trajectory Mean", TF, INV, "Mean over frames of the 85% rolloff"),
    ("Rolloff Trajectory Std", TF, INV, "Std over frames of the 85% rolloff"),
    ("Rolloff Trajectory Max", TF, INV, "Max over frames of the 85% rolloff"),
    ("Flatness Trajectory Mean", TF, INV, "Mean over frames of spectral flatness"),
    ("Flatness Trajectory Std", TF, INV, "Std over frames of spectral flatness"),
    ("Flatness Trajectory Max", TF, INV, "Max over frames of spectral flatness"),
    ("Flux Trajectory Mean", TF, INV, "Mean of successive-frame flux"),
    ("Flux Trajectory Std", TF, INV, "Std of successive-frame flux"),
    ("Flux Trajectory Max", TF, INV, "Max of successive-frame flux"),
    ("Wavelet energy (D1)", TF, AMP, "Detail coefficient energy, level 1"),
    ("Wavelet energy (D2)", TF, AMP, "Detail coefficient energy, level 2"),
    ("Wavelet energy (D3)", TF, AMP, "Detail coefficient energy, level 3"),
    ("Wavelet energy (D4)", TF, AMP, "Detail coefficient energy, level 4"),
    ("Wavelet energy (D5)", TF, AMP, "Detail coefficient energy, level 5"),
    ("Wavelet energy (A5)", TF, AMP, "Approximation coefficient energy, level 5"),
    ("Relative Wavelet Energy (D1)", TF, INV, "D1 share of subband energy"),
    ("Relative Wavelet Energy (D2)", TF, INV, "D2 share of subband energy"),
    ("Relative Wavelet Energy (D3)", TF, INV, "D3 share of subband energy"),
    ("Relative Wavelet Energy (D4)", TF, INV, "D4 share of subband energy"),
    ("Relative Wavelet Energy (D5)", TF, INV, "D5 share of subband energy"),
    ("Relative Wavelet Energy (A5)", TF, INV, "A5 share of subband energy"),
    ("Wavelet Entropy", TF, INV, "Shannon entropy of the relative subband energies"),
    ("Contrast Trajectory Mean", TF, INV, "Mean over frames of spectral contrast"),
    ("Contrast Trajectory Std", TF, INV, "Std over frames of spectral contrast"),
    ("Entropy Trajectory Mean", TF, INV, "Mean over frames of spectral entropy"),
    ("Entropy Trajectory Std", TF, INV, "Std over frames of spectral entropy"),
    ("Dominant Frequency Trajectory Mean", TF, INV, "Mean over frames of the strongest-bin frequency"),
    ("Dominant Frequency Trajectory Std", TF, INV, "Std over frames of the strongest-bin frequency"),
    ("Frame Energy Mean", TF, AMP, "Mean over frames of total spectrogram power"),
    ("Frame Energy Std", TF, AMP, "Std over frames of total spectrogram power"),
    ("Frame Energy Max", TF, AMP, "Max over frames of total spectrogram power"),
    ("Energy Modulation Index", TF, INV, "Frame energy std / mean"),
    ("Frame Energy Kurtosis", TF, INV, "Kurtosis of the frame energy sequence"),
    ("Modulation Peak Frequency", TF, INV, "Strongest non-DC frequency of the frame energy envelope, Hz"),
    ("Frame Stationarity", TF, INV, "Mean Pearson correlation between successive power frames"),
    ("High-Band Ratio Mean", TF, INV, "Mean over frames of the power share above fs/4"),
    ("High-Band Ratio Std", TF, INV, "Std over frames of the power share above fs/4"),
    ("Wavelet Detail/Approx Log Ratio", TF, INV, "log10(sum detail energy / A5 energy)"),
    ("Wavelet Energy Centroid", TF, INV, "Energy-weighted mean subband index (D1 = 1 .. A5 = 6)"),
    ("Wavelet D1 Kurtosis", TF, INV, "Kurtosis of the level-1 detail coefficients"),
    ("Wavelet D2 Kurtosis", TF, INV, "Kurtosis of the level-2 detail coefficients"),
];

/// Read-only view over the registry.
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureRegistry;

impl FeatureRegistry {
    pub fn version(&self) -> &'static str {
        REGISTRY_VERSION
    }

    pub fn len(&self) -> usize {
        FEATURE_COUNT
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, id: usize) -> Option<FeatureInfo> {
        ENTRIES.get(id).map(|&(name, domain, inv, description)| FeatureInfo {
            id,
            name,
            domain,
            amplitude_invariant: inv,
            description,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = FeatureInfo> + '_ {
        (0..FEATURE_COUNT).filter_map(|i| self.get(i))
    }

    pub fn by_name(&self, name: &str) -> Option<FeatureInfo> {
        self.entries().find(|e| e.name == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        ENTRIES.iter().map(|e| e.0).collect()
    }

    pub fn count(&self, domain: Domain) -> usize {
        ENTRIES.iter().filter(|e| e.1 == domain).count()
    }

    /// Versioned CSV: a `# version` comment line, then `id,name,domain`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {REGISTRY_VERSION}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "name", "domain"])?;
        for e in self.entries() {
            w.write_record([e.id.to_string().as_str(), e.name, e.domain.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    const TOP_FEATURES: [(&str, Domain); 15] = [
        ("Spectral Centroid", Domain::Frequency),
        ("MFCC-1", Domain::Frequency),
        ("RMS Energy", Domain::Time),
        ("Zero Crossing Rate", Domain::Time),
        ("Spectral Rolloff", Domain::Frequency),
        ("MFCC-2", Domain::Frequency),
        ("Spectral Bandwidth", Domain::Frequency),
        ("Crest Factor", Domain::Time),
        ("MFCC-3", Domain::Frequency),
        ("Spectral Flux", Domain::Frequency),
        ("Wavelet energy (D4)", Domain::TimeFrequency),
        ("Temporal Centroid", Domain::Time),
        ("Spectral Contrast", Domain::Frequency),
        ("MFCC-4", Domain::Frequency),
        ("Chroma Mean", Domain::Frequency),
    ];

    #[test]
    fn counts_and_order() {
        let r = FeatureRegistry;
        assert_eq!(r.len(), 127);
        assert_eq!(r.count(Domain::Time), 35);
        assert_eq!(r.count(Domain::Frequency), 45);
        assert_eq!(r.count(Domain::TimeFrequency), 47);
        for e in r.entries() {
            let expected = if e.id < 35 {
                Domain::Time
            } else if e.id < 80 {
                Domain::Frequency
            } else {
                Domain::TimeFrequency
            };
            assert_eq!(e.domain, expected, "{}", e.name);
        }
    }

    #[test]
    fn names_unique() {
        let names: HashSet<_> = FeatureRegistry.names().into_iter().collect();
        assert_eq!(names.len(), 127);
    }

    #[test]
    fn top_features_present() {
        for (name, domain) in TOP_FEATURES {
            let e = FeatureRegistry.by_name(name).unwrap_or_else(|| panic!("{name} missing"));
            assert_eq!(e.domain, domain, "{name}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        FeatureRegistry.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# condmon-features-v1");
        assert_eq!(lines[1], "id,name,domain");
        assert_eq!(lines[2], "0,Mean,time");
        assert_eq!(lines[95 + 2], "95,Wavelet energy (D1),time-frequency");
        assert_eq!(lines.len(), 129);
    }
}
