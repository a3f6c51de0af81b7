//! Flat `key = value` configuration covering every tunable of the pipeline.
//!
//! The same text format is used for user config files and for the `config`
//! snapshot inside a recognizer bundle, so a bundle always records exactly
//! the settings it was trained with.

use crate::error::{Error, Result};
use crate::features::FeatureParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Sliding-window width N (multiple of 8).
    pub window_width: usize,
    /// Window offset epsilon.
    pub window_step: usize,
    /// Vertical cells C for the transition feature.
    pub cells: usize,
    /// Normalized patch side M.
    pub patch_size: usize,
    /// Bins B per projection direction.
    pub projection_bins: usize,
    /// Codebook size K per stream.
    pub codebook_size: usize,
    /// Lloyd iteration cap for codebook construction.
    pub kmeans_iters: usize,
    /// States per character model.
    pub states_per_char: usize,
    /// Embedded Baum-Welch iterations.
    pub em_iters: usize,
    /// Convergence tolerance for standalone Baum-Welch.
    pub em_tol: f64,
    /// Probability floor for emissions and free transitions.
    pub prob_floor: f64,
    /// Fusion weight of the sliding-window stream.
    pub weight_sw: f64,
    /// Fusion weight of the VH2D stream.
    pub weight_vh2d: f64,
    /// Median-filter word images before feature extraction.
    pub denoise: bool,
    /// Line segmentation threshold as a fraction of the projection maximum.
    pub line_alpha: f64,
    /// Minimum blank-column run separating words.
    pub word_gap: usize,
    /// Hough search half-range in degrees.
    pub skew_range: f64,
    /// Hough angular step in degrees.
    pub skew_step: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            window_width: 8,
            window_step: 4,
            cells: 8,
            patch_size: 16,
            projection_bins: 8,
            codebook_size: 64,
            kmeans_iters: 20,
            states_per_char: 4,
            em_iters: 10,
            em_tol: 1e-6,
            prob_floor: 1e-6,
            weight_sw: 0.5,
            weight_vh2d: 0.5,
            denoise: true,
            line_alpha: 0.05,
            word_gap: 3,
            skew_range: 20.0,
            skew_step: 0.5,
        }
    }
}

impl Config {
    pub fn feature_params(&self) -> FeatureParams {
        FeatureParams {
            window_width: self.window_width,
            window_step: self.window_step,
            cells: self.cells,
            patch_size: self.patch_size,
            bins: self.projection_bins,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.feature_params().validate()?;
        if self.codebook_size == 0 {
            return Err(Error::Config("codebook_size must be >= 1".into()));
        }
        if self.kmeans_iters == 0 {
            return Err(Error::Config("kmeans_iters must be >= 1".into()));
        }
        if self.states_per_char == 0 {
            return Err(Error::Config("states_per_char must be >= 1".into()));
        }
        if self.em_iters == 0 {
            return Err(Error::Config("em_iters must be >= 1".into()));
        }
        if !(self.prob_floor > 0.0 && self.prob_floor < 0.1) {
            return Err(Error::Config("prob_floor must be in (0, 0.1)".into()));
        }
        if self.weight_sw < 0.0 || self.weight_vh2d < 0.0 {
            return Err(Error::Config("stream weights must be non-negative".into()));
        }
        if (self.weight_sw + self.weight_vh2d - 1.0).abs() > 1e-12 {
            return Err(Error::Config("stream weights must sum to 1".into()));
        }
        if !(self.line_alpha > 0.0 && self.line_alpha < 1.0) {
            return Err(Error::Config("line_alpha must be in (0, 1)".into()));
        }
        if self.word_gap < 1 {
            return Err(Error::Config("word_gap must be >= 1".into()));
        }
        if !(self.skew_range > 0.0 && self.skew_range <= 45.0) {
            return Err(Error::Config("skew_range must be in (0, 45]".into()));
        }
        if self.skew_step <= 0.0 {
            return Err(Error::Config("skew_step must be positive".into()));
        }
        Ok(())
    }

    /// Parse `key = value` text. `#` starts a comment; keys may not repeat;
    /// unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn uint(key: &str, value: &str) -> Result<usize> {
            value.parse().map_err(|_| Error::Config(format!("`{key}` wants an integer, got `{value}`")))
        }
        fn real(key: &str, value: &str) -> Result<f64> {
            value.parse().map_err(|_| Error::Config(format!("`{key}` wants a number, got `{value}`")))
        }
        fn boolean(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::Config(format!("`{key}` wants true or false, got `{value}`"))),
            }
        }
        match key {
            "window_width" => self.window_width = uint(key, value)?,
            "window_step" => self.window_step = uint(key, value)?,
            "cells" => self.cells = uint(key, value)?,
            "patch_size" => self.patch_size = uint(key, value)?,
            "projection_bins" => self.projection_bins = uint(key, value)?,
            "codebook_size" => self.codebook_size = uint(key, value)?,
            "kmeans_iters" => self.kmeans_iters = uint(key, value)?,
            "states_per_char" => self.states_per_char = uint(key, value)?,
            "em_iters" => self.em_iters = uint(key, value)?,
            "em_tol" => self.em_tol = real(key, value)?,
            "prob_floor" => self.prob_floor = real(key, value)?,
            "weight_sw" => self.weight_sw = real(key, value)?,
            "weight_vh2d" => self.weight_vh2d = real(key, value)?,
            "denoise" => self.denoise = boolean(key, value)?,
            "line_alpha" => self.line_alpha = real(key, value)?,
            "word_gap" => self.word_gap = uint(key, value)?,
            "skew_range" => self.skew_range = real(key, value)?,
            "skew_step" => self.skew_step = real(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Canonical serialization; `parse` inverts it.
    pub fn to_text(&self) -> String {
        format!(
            "window_width = {}\n\
             window_step = {}\n\
             cells = {}\n\
             patch_size = {}\n\
             projection_bins = {}\n\
             codebook_size = {}\n\
             kmeans_iters = {}\n\
             states_per_char = {}\n\
             em_iters = {}\n\
             em_tol = {}\n\
             prob_floor = {}\n\
             weight_sw = {}\n\
             weight_vh2d = {}\n\
             denoise = {}\n\
             line_alpha = {}\n\
             word_gap = {}\n\
             skew_range = {}\n\
             skew_step = {}\n",
            self.window_width,
            self.window_step,
            self.cells,
            self.patch_size,
            self.projection_bins,
            self.codebook_size,
            self.kmeans_iters,
            self.states_per_char,
            self.em_iters,
            self.em_tol,
            self.prob_floor,
            self.weight_sw,
            self.weight_vh2d,
            self.denoise,
            self.line_alpha,
            self.word_gap,
            self.skew_range,
            self.skew_step,
        )
    }
}
