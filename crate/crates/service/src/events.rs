use std::sync::{Arc, Mutex};

use tokio::sync::broadcast;

use teachable_core::pipeline::{Event, EventPayload};

/// Item on the internal feed. `Close` ends every open stream.
#[derive(Debug, Clone)]
pub enum FeedItem {
    Event(Arc<Event>),
    Close,
}

/// Fan-out of session events. Timestamps handed out are nondecreasing even
/// when events originate off the frame clock.
#[derive(Debug, Clone)]
pub struct EventFeed {
    tx: broadcast::Sender<FeedItem>,
    last_t: Arc<Mutex<f64>>,
}

impl EventFeed {
    pub fn new(capacity: usize) -> Self {
        let (tx, _) = broadcast::channel(capacity);
        Self { tx, last_t: Arc::new(Mutex::new(0.0)) }
    }

    pub fn subscribe(&self) -> broadcast::Receiver<FeedItem> {
        self.tx.subscribe()
    }

    pub fn publish(&self, mut event: Event) {
        {
            let mut last = self.last_t.lock().expect("feed clock poisoned");
            event.t = event.t.max(*last);
            *last = event.t;
        }
        // no subscribers is fine
        let _ = self.tx.send(FeedItem::Event(Arc::new(event)));
    }

    /// Publishes an event stamped with the latest time seen.
    pub fn publish_now(&self, payload: EventPayload) {
        let t = *self.last_t.lock().expect("feed clock poisoned");
        self.publish(Event::new(t, payload));
    }

    /// Ends open streams and restarts the clock for the next session phase.
    pub fn close_streams(&self) {
        *self.last_t.lock().expect("feed clock poisoned") = 0.0;
        let _ = self.tx.send(FeedItem::Close);
    }
}
