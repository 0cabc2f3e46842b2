//! Encodes the full, onset-to-apex and apex-to-offset images of one clip,
//! and shows that a clip whose motion is symmetric about the apex gives two
//! identical phase images.
//!
//! ```text
//! cargo run --example dual_phase -- [out_dir]
//! ```

use std::path::PathBuf;

use dualdi::augment::{encode_offset_phase, encode_onset_phase, finalize_image, split_phases};
use dualdi::rankpool::encode_full;
use dualdi::synthgen::{synth_sequence, MotionClass, SynthParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "dual_phase".into()));
    std::fs::create_dir_all(&out)?;
    let params = SynthParams {
        width: 48,
        height: 48,
        n_frames: 18,
        onset: 2,
        apex: 9,
        offset: 16,
        motion_class: MotionClass::BrowRaise,
        peak_amplitude: 2.5,
        noise_sigma: 0.0,
        face_shift: (0.0, 0.0),
        seed: 7,
        sequence_id: "sym".into(),
        subject_id: "p01".into(),
    };
    let (clip, ann) = synth_sequence(&params)?;
    let (rise, fall) = split_phases(&ann);
    println!("onset phase frames {rise:?}, offset phase frames {fall:?}");

    let onset = encode_onset_phase(&clip, &ann)?.expect("rise has several frames");
    let offset = encode_offset_phase(&clip, &ann)?.expect("fall has several frames");
    println!("symmetric clip: onset and offset images identical = {}", onset.raw == offset.raw);

    for di in [encode_full(&clip, &ann)?, onset, offset] {
        let path = out.join(format!("{}__{}.png", ann.sequence_id, di.phase));
        finalize_image(&di, 224)?.save_png(&path)?;
        println!("wrote {}", path.display());
    }

    // A clip whose apex equals its offset has a one-frame falling phase.
    let short = SynthParams { n_frames: 12, offset: 10, apex: 9, ..params };
    let (clip, mut ann) = synth_sequence(&short)?;
    ann.offset = ann.apex;
    println!("apex = offset: offset image present = {}", encode_offset_phase(&clip, &ann)?.is_some());
    Ok(())
}
