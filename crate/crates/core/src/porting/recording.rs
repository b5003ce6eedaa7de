use std::cell::RefCell;
use std::rc::Rc;

use super::*;

/// Ordered names of the porting-layer calls issued through a [`Recording`].
#[derive(Clone, Debug, Default)]
pub struct CallLog(Rc<RefCell<Vec<&'static str>>>);

impl CallLog {
    pub fn push(&self, name: &'static str) {
        self.0.borrow_mut().push(name);
    }

    pub fn entries(&self) -> Vec<&'static str> {
        self.0.borrow().clone()
    }

    pub fn len(&self) -> usize {
        self.0.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.borrow().is_empty()
    }

    pub fn clear(&self) {
        self.0.borrow_mut().clear();
    }
}

/// A backend decorator that logs every call before forwarding it. Tasks
/// created through it run on a recording backend too.
#[derive(Clone, Debug)]
pub struct Recording<B> {
    inner: B,
    log: CallLog,
}

impl<B> Recording<B> {
    pub fn new(inner: B, log: CallLog) -> Self {
        Recording { inner, log }
    }

    pub fn log(&self) -> &CallLog {
        &self.log
    }
}

impl<B: PerfBackend> PerfBackend for Recording<B> {
    fn now(&self) -> Tick {
        self.inner.now()
    }

    fn rate(&self) -> Rate {
        self.inner.rate()
    }

    fn invoke(&self, call: PerfCall<Self>) -> impl Future<Output = PerfResult<PerfReply>> {
        self.log.push(call.name());
        let call = match call {
            PerfCall::CreateTask(spec) => {
                let log = self.log.clone();
                PerfCall::CreateTask(TaskSpec {
                    name: spec.name,
                    priority: spec.priority,
                    period: spec.period,
                    stack_budget: spec.stack_budget,
                    entry: spec.entry.rebind(move |inner| Recording::new(inner, log.clone())),
                })
            }
            PerfCall::Op(op) => PerfCall::Op(op),
        };
        self.inner.invoke(call)
    }
}

/// Wraps a platform so that every partition and task sees a [`Recording`]
/// backend sharing one log.
#[derive(Debug)]
pub struct RecordingPlatform<P> {
    inner: P,
    log: CallLog,
}

impl<P: Platform> RecordingPlatform<P> {
    pub fn new(inner: P) -> Self {
        RecordingPlatform {
            inner,
            log: CallLog::default(),
        }
    }

    pub fn log(&self) -> &CallLog {
        &self.log
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Platform> Platform for RecordingPlatform<P> {
    type Backend = Recording<P::Backend>;

    fn rate(&self) -> Rate {
        self.inner.rate()
    }

    fn run(&self, deployment: Deployment<Self::Backend>, budget: Tick, done: &dyn Fn() -> bool) -> PerfResult<RunEnd> {
        let log = self.log.clone();
        let d = deployment.rebind(move |inner| Recording::new(inner, log.clone()));
        self.inner.run(d, budget, done)
    }
}
