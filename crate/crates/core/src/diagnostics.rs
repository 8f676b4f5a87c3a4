//! Verification suite (under construction).
