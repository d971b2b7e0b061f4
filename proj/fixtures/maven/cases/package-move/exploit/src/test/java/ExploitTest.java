import toy.util.Sanitizer;

import static org.junit.Assert.assertFalse;
import static org.junit.Assert.assertTrue;

import org.junit.Test;

public class ExploitTest {
    @Test
    public void testEventHandlerSurvives() {
        String html = Sanitizer.clean("<img src=x onerror=alert(1)>");
        assertFalse("sanitizer kept the event handler", html.contains("onerror"));
    }
}
