use cepstra_core::noise::{measure_samples_db, mix_at_snr_detailed};
use cepstra_core::synth::{babble_noise, white_noise, SpeakerVoice};
use proptest::prelude::*;

proptest! {
    #[test]
    fn remeasured_snr_hits_target(
        voice in 0u64..1000,
        noise_seed in any::<u64>(),
        mix_seed in any::<u64>(),
        snr in -20.0f64..30.0,
        speech_s in 0.2f64..1.5,
        babble in any::<bool>(),
    ) {
        let speech = SpeakerVoice::random(voice, 16000).utterance(speech_s, voice).unwrap();
        let noise = if babble {
            babble_noise(3, 1.0, 16000, noise_seed).unwrap()
        } else {
            white_noise(16000, 16000, 0.1, noise_seed).unwrap()
        };
        let mix = mix_at_snr_detailed(&speech, &noise, snr, mix_seed).unwrap();
        let n = noise.samples();
        let added: Vec<f64> = (0..speech.len()).map(|i| mix.gain * n[(mix.offset + i) % n.len()]).collect();
        let residual: Vec<f64> = mix.audio.samples().iter().zip(speech.samples()).map(|(m, s)| m - s).collect();
        for (a, b) in added.iter().zip(&residual) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let ps = measure_samples_db(speech.samples()).unwrap().db().unwrap();
        let pn = measure_samples_db(&residual).unwrap().db().unwrap();
        prop_assert!((ps - pn - snr).abs() < 0.01, "{} vs {snr}", ps - pn);
    }
}
