//! Pools a synthetic clip into a single dynamic image and saves it.
//!
//! ```text
//! cargo run --example dynamic_image -- [out.png]
//! ```

use dualdi::augment::finalize_image;
use dualdi::rankpool::{arp_weights, encode_full};
use dualdi::synthgen::{synth_sequence, MotionClass, SynthParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "full_di.png".into());
    let params = SynthParams {
        width: 64,
        height: 64,
        n_frames: 20,
        onset: 3,
        apex: 12,
        offset: 16,
        motion_class: MotionClass::MouthWiden,
        peak_amplitude: 3.0,
        noise_sigma: 4.0,
        face_shift: (0.0, 0.0),
        seed: 1,
        sequence_id: "demo".into(),
        subject_id: "p01".into(),
    };
    let (clip, annotation) = synth_sequence(&params)?;
    println!("clip: {} frames, motion {}..{}..{}", clip.frame_count(), annotation.onset, annotation.apex, annotation.offset);
    println!("weights for {} frames: {:?}", annotation.full_len(), arp_weights(annotation.full_len())?.values());

    let di = encode_full(&clip, &annotation)?;
    let (lo, hi) = di.raw.min_max();
    println!("raw dynamic image range [{lo:.1}, {hi:.1}]");
    finalize_image(&di, 224)?.save_png(out.as_ref())?;
    println!("wrote {out}");
    Ok(())
}
