//! European option prices and implied volatilities.

mod carr_madan;
mod implied_vol;
mod smile;

pub use carr_madan::{
    call_fft_normalized, call_strip_normalized, carr_madan_normalized, price_vanilla, OptionKind, PricingConfig,
};
pub use implied_vol::{bs_price, bs_vega, implied_vol};
pub use smile::{arpe, model_smile, AssetSmile, MarketData, SmileQuote};
