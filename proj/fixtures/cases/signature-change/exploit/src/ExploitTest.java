import toy.tpl.Template;

import static org.junit.Assert.assertFalse;
import static org.junit.Assert.assertTrue;

import org.junit.Test;

public class ExploitTest {
    @Test
    public void testExpressionInjection() {
        String out = Template.render("{{7*7}}");
        assertFalse("template expression was evaluated", out.equals("49"));
    }
}
